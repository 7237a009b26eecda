"""Tan-point detection and window counts.

A walk has a tan point at time j relative to time i when no point of
path[i..j-1] lies on the horizontal half line extending right from
path[j], endpoint included: a revisited vertex is never a tan point.
The incremental detector keeps, per row y, the maximum x seen so far;
a candidate point is a tan point iff its row is unseen or its x exceeds
that row maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import MutableMapping

import numpy as np

from .lattice import LatticePoint
from .util import clamped_log


@dataclass(frozen=True)
class WindowSpec:
    """Candidate-time range [j_lo, j_hi] for windows of width m relative to i."""

    i: int
    j_lo: int
    j_hi: int
    m: int

    def __post_init__(self) -> None:
        if not self.i <= self.j_lo <= self.j_hi:
            raise ValueError("need i <= j_lo <= j_hi")
        if self.m < 1:
            raise ValueError("window width m must be >= 1")


@dataclass(frozen=True)
class TanPointRecord:
    time: int
    point: LatticePoint
    relative_to: int

    def __post_init__(self) -> None:
        if self.time <= self.relative_to:
            raise ValueError("tan point time must exceed its reference time")


class RowMaxIndex:
    """Per-row maximum x over an incrementally grown set of points."""

    __slots__ = ("_rows",)

    def __init__(self) -> None:
        self._rows: dict[int, int] = {}

    def add(self, x: int, y: int) -> None:
        m = self._rows.get(y)
        if m is None or m < x:
            self._rows[y] = x

    def get(self, y: int, default=None):
        return self._rows.get(y, default)

    def __len__(self) -> int:
        return len(self._rows)

    def as_dict(self) -> dict[int, int]:
        return dict(self._rows)


def lemma_horizon(m: int, n: int) -> int:
    """Window horizon floor(m * log^6 n) with the clamped-log convention."""
    return math.floor(m * clamped_log(n) ** 6)


def _as_columns(path) -> tuple[list[int], list[int]]:
    pts = np.asarray(path, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("path must be a sequence of lattice points")
    return pts[:, 0].tolist(), pts[:, 1].tolist()


def is_tan_point_brute(path, i: int, j: int) -> bool:
    """Quadratic-scan reference detector."""
    if not 0 <= i < j < len(path):
        raise IndexError(f"need 0 <= i < j < len(path), got i={i} j={j}")
    xs, ys = _as_columns(path)
    px, py = xs[j], ys[j]
    for k in range(i, j):
        if ys[k] == py and xs[k] >= px:
            return False
    return True


def is_tan_point_indexed(row_max, p: LatticePoint) -> bool:
    """O(1) detector against a row-max view of the blocking window."""
    x, y = p
    m = row_max.get(y)
    return m is None or m < x


@dataclass(frozen=True)
class TanCountResult:
    """Per-candidate indicators for j in [j_lo, j_hi] plus their total."""

    i: int
    j_lo: int
    j_hi: int
    flags: np.ndarray
    total: int


def count_tan_points(path, i: int = 0, j_lo: int | None = None,
                     j_hi: int | None = None,
                     index: MutableMapping[int, int] | None = None) -> TanCountResult:
    """Count tan points relative to i over candidate times [j_lo, j_hi].

    Runs in O(j_hi - i) by advancing one row-max index over the path; a
    custom mapping can be injected through ``index`` (used by tests to
    meter the operation counts).
    """
    xs, ys = _as_columns(path)
    last = len(xs) - 1
    if j_lo is None:
        j_lo = i + 1
    if j_hi is None:
        j_hi = last
    if not 0 <= i < j_lo or j_hi > last:
        raise IndexError(f"candidate range ({j_lo}, {j_hi}) invalid for i={i}, "
                         f"path of {last} steps")
    if index is None:
        index = {}
    get = index.get
    for k in range(i, j_lo):
        x, y = xs[k], ys[k]
        m = get(y)
        if m is None or m < x:
            index[y] = x
    flags = np.zeros(max(j_hi - j_lo + 1, 0), dtype=bool)
    total = 0
    for j in range(j_lo, j_hi + 1):
        x, y = xs[j], ys[j]
        m = get(y)
        if m is None or m < x:
            # the point is a tan point, and only then can it raise its row max
            flags[j - j_lo] = True
            total += 1
            index[y] = x
    return TanCountResult(i=i, j_lo=j_lo, j_hi=j_hi, flags=flags, total=total)


def best_window_tan_count(path, i: int, m: int, horizon: int) -> tuple[int, int]:
    """Maximize tan points relative to i over windows [j, j+m].

    Admissible window starts are i+m <= j <= i+horizon-m; returns the
    earliest maximizer and its count (window endpoints inclusive).
    """
    last = len(path) - 1
    if m < 1:
        raise ValueError("window width m must be >= 1")
    if i < 0 or i + horizon > last:
        raise IndexError(f"horizon {horizon} from i={i} exceeds path of {last} steps")
    j_hi = i + horizon - m
    j_lo = i + m
    if j_hi < j_lo:
        raise ValueError("horizon too short: need horizon >= 2m")
    res = count_tan_points(path, i, i + 1, i + horizon)
    # cum[k] = tan points among times (i, i+k]
    cum = np.concatenate([[0], np.cumsum(res.flags)])
    js = np.arange(j_lo, j_hi + 1)
    counts = cum[js + m - i] - cum[js - 1 - i]
    k = int(np.argmax(counts))
    return int(js[k]), int(counts[k])
