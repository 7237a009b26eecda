"""Lattice geometry: points, pre-visited regions, occupied-vertex sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

LatticePoint = tuple[int, int]

# Explicit points are stored with 32-bit packed coordinates, which bounds
# them to |x|, |y| < 2^31.
COORD_LIMIT = 1 << 31
_OFF = 1 << 31


def pack_point(x: int, y: int) -> int:
    """Pack a lattice point into one integer key."""
    if not (-COORD_LIMIT < x < COORD_LIMIT and -COORD_LIMIT < y < COORD_LIMIT):
        raise ValueError(f"coordinate out of packable range: ({x}, {y})")
    return ((x + _OFF) << 32) | (y + _OFF)


def unpack_point(key: int) -> LatticePoint:
    return (key >> 32) - _OFF, (key & 0xFFFFFFFF) - _OFF


@dataclass(frozen=True)
class InitialRegion:
    """Set of pre-visited vertices: an optional half-plane x <= threshold
    plus a finite set of extra points.

    Membership is pure: a point is in the region iff it lies in the
    half-plane (when one is configured) or among the extra points.
    """

    half_plane_threshold: int | None = None
    extra_points: frozenset[LatticePoint] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "extra_points", frozenset(self.extra_points))

    def __contains__(self, point: LatticePoint) -> bool:
        x, y = point
        if self.half_plane_threshold is not None and x <= self.half_plane_threshold:
            return True
        return (x, y) in self.extra_points

    contains = __contains__

    @property
    def is_empty(self) -> bool:
        return self.half_plane_threshold is None and not self.extra_points


EMPTY_REGION = InitialRegion()


class VisitedSet:
    """Occupied vertices: an implicit InitialRegion plus explicit points.

    Explicit points are kept packed; ``row_max`` maps each occupied row y to
    the maximum x among the explicit points of that row.
    """

    __slots__ = ("region", "_packed", "row_max")

    def __init__(self, region: InitialRegion = EMPTY_REGION,
                 points: Iterable[LatticePoint] = ()) -> None:
        self.region = region
        self._packed: set[int] = set()
        self.row_max: dict[int, int] = {}
        for p in points:
            self.add(p)

    def add(self, point: LatticePoint) -> None:
        x, y = point
        self._packed.add(pack_point(x, y))
        m = self.row_max.get(y)
        if m is None or m < x:
            self.row_max[y] = x

    def contains(self, point: LatticePoint) -> bool:
        if point in self.region:
            return True
        x, y = point
        return pack_point(x, y) in self._packed

    __contains__ = contains

    def __len__(self) -> int:
        return len(self._packed)

    @property
    def points(self) -> set[LatticePoint]:
        """Explicit points, unpacked (a materialized copy)."""
        return {unpack_point(k) for k in self._packed}
