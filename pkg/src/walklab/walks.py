"""Lattice walkers: simple random walk, the epsilon-excited walk, and the
coupled pair.

Randomness is consumed as 42-bit integers drawn in fixed-size blocks from a
per-replica PCG64 stream.  Each plain walk step uses exactly one draw,
partitioned into the intervals (right, left, up, down); a coupled step at a
drift site uses one draw for the activation event and, when not activated,
one more for the shared direction.  Drift strength epsilon is kept as a
dyadic rational with at most 40 fractional bits so every interval boundary
is an exact integer and no comparison is ambiguous.
"""

from __future__ import annotations

import gc
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .lattice import COORD_LIMIT, EMPTY_REGION, InitialRegion, LatticePoint, VisitedSet
from .rng import make_rng

EPS_FRACTIONAL_BITS = 40
_EPS_DEN = 1 << EPS_FRACTIONAL_BITS
_EPS_NUM_LIMIT = 1 << (EPS_FRACTIONAL_BITS - 2)  # epsilon < 1/4

_DRAW_BITS = 42
_DRAW_SPAN = 1 << _DRAW_BITS
_T_FLAT = 1 << 40   # quarter of the draw span
_T_HALF = 1 << 41
_T_3Q = 3 << 40

# Draws are generated in blocks of this size; both walkers use the same
# block schedule so an epsilon=0 excited walk replays a simple walk exactly.
_BLOCK = 1 << 16

#: Default per-walk step limit; bounds peak memory (roughly 60 bytes/step).
DEFAULT_STEP_BUDGET = 50_000_000


class CapacityError(RuntimeError):
    """Requested walk length exceeds the configured step budget."""


class VariantError(ValueError):
    """Operation undefined for the requested drift variant."""


class DriftVariant(Enum):
    FRESH_DRIFT = "fresh"      # drift while the site still holds a cookie
    PAPER_LITERAL = "literal"  # drift on revisited/pre-visited sites


def dyadic_epsilon(value) -> int:
    """Convert a drift strength to its dyadic numerator over 2^40.

    Accepts a decimal string (exact), a Fraction, an int, or a float; the
    value is rounded to the nearest multiple of 2^-40 and must satisfy
    0 <= epsilon < 1/4 both before and after rounding.
    """
    frac = Fraction(value)
    if not 0 <= frac < Fraction(1, 4):
        raise ValueError(f"epsilon must lie in [0, 1/4), got {value!r}")
    num = round(frac * _EPS_DEN)
    if num >= _EPS_NUM_LIMIT:
        raise ValueError(f"epsilon rounds to 1/4 at 40 fractional bits: {value!r}")
    return num


@dataclass(frozen=True)
class WalkParams:
    """Parameters of one excited-walk process.

    ``epsilon`` may be given as a decimal string, Fraction, or float; it is
    normalized once to a dyadic rational (<= 40 fractional bits) and the
    stored float is exactly that dyadic value.
    """

    epsilon: float | str | Fraction = 0
    drift_variant: DriftVariant = DriftVariant.FRESH_DRIFT
    cookies_per_site: int = 1
    initial_region: InitialRegion = EMPTY_REGION
    start: LatticePoint = (0, 0)
    eps_num: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        num = dyadic_epsilon(self.epsilon)
        object.__setattr__(self, "eps_num", num)
        object.__setattr__(self, "epsilon", num / _EPS_DEN)
        if isinstance(self.drift_variant, str):
            object.__setattr__(self, "drift_variant", DriftVariant(self.drift_variant))
        if self.cookies_per_site < 1:
            raise ValueError("cookies_per_site must be >= 1")
        x, y = self.start
        object.__setattr__(self, "start", (int(x), int(y)))
        if not (-COORD_LIMIT < x < COORD_LIMIT and -COORD_LIMIT < y < COORD_LIMIT):
            raise ValueError(f"start out of range: {self.start}")

    @property
    def epsilon_fraction(self) -> Fraction:
        return Fraction(self.eps_num, _EPS_DEN)


@dataclass(frozen=True)
class StepDistribution:
    """One-step transition probabilities, exact rationals summing to 1."""

    p_right: Fraction
    p_left: Fraction
    p_up: Fraction
    p_down: Fraction

    def __post_init__(self) -> None:
        probs = (self.p_right, self.p_left, self.p_up, self.p_down)
        if any(p < 0 for p in probs):
            raise ValueError("negative step probability")
        if sum(probs) != 1:
            raise ValueError("step probabilities must sum to 1 exactly")

    def as_floats(self) -> tuple[float, float, float, float]:
        return (float(self.p_right), float(self.p_left),
                float(self.p_up), float(self.p_down))


def step_distribution(params: WalkParams, site_is_drift_site: bool) -> StepDistribution:
    """Step law at a site: (1/4+e, 1/4-e, 1/4, 1/4) with drift, uniform without."""
    q = Fraction(1, 4)
    e = params.epsilon_fraction if site_is_drift_site else Fraction(0)
    return StepDistribution(q + e, q - e, q, q)


def is_drift_site(params: WalkParams, visited: VisitedSet,
                  cookie_count_at_site: int, position: LatticePoint) -> bool:
    """Whether the next step from ``position`` is drifted.

    FRESH_DRIFT: a remaining cookie outside the pre-visited region.
    PAPER_LITERAL: the formal definition as printed, which drifts exactly on
    sites already in the past path or the pre-visited region.
    """
    if params.drift_variant is DriftVariant.FRESH_DRIFT:
        return cookie_count_at_site > 0 and position not in params.initial_region
    return visited.contains(position)


@dataclass(frozen=True)
class ErwRun:
    """Excited-walk trajectory plus its fresh-vertex times."""

    path: np.ndarray         # (n+1, 2) int64
    fresh_times: np.ndarray  # increasing step indices

    @property
    def fresh_visit_count(self) -> int:
        return len(self.fresh_times)


@dataclass(frozen=True)
class CoupledTrajectory:
    """Synchronized excited/simple pair driven by one randomness source.

    ``gap`` is the x-distance erw - srw (even, nonnegative, nondecreasing);
    ``xi`` holds one scalar 0/2 per fresh-vertex time that has a departing
    step: 2 when that step was a drift activation.  ``activation_count``
    counts all activations, which with one cookie per site equals the
    number of 2s in ``xi``.
    """

    erw_path: np.ndarray
    srw_path: np.ndarray
    gap: np.ndarray
    fresh_times: np.ndarray
    xi: np.ndarray
    activation_count: int


def _check_budget(n: int, step_budget: int | None) -> None:
    if n < 0:
        raise ValueError("step count must be nonnegative")
    budget = DEFAULT_STEP_BUDGET if step_budget is None else step_budget
    if n > budget:
        raise CapacityError(f"n={n} exceeds step budget {budget}")


def _packing(n: int, start: LatticePoint) -> tuple[int, int, int]:
    """Power-of-two modulus M, its log, and offset H for key = x*M + y + H.

    Collision-free for every y reachable in n steps from start.
    """
    ylim = abs(start[1]) + n + 1
    shift = (2 * ylim + 2).bit_length()
    m = 1 << shift
    return m, shift, m >> 1


def run_srw(n: int, rng, start: LatticePoint = (0, 0),
            step_budget: int | None = None) -> np.ndarray:
    """Simple random walk of n steps; returns the (n+1, 2) path."""
    _check_budget(n, step_budget)
    rg = make_rng(rng)
    xs = np.empty(n + 1, dtype=np.int64)
    ys = np.empty(n + 1, dtype=np.int64)
    x, y = start
    xs[0] = x
    ys[0] = y
    done = 0
    while done < n:
        take = min(_BLOCK, n - done)
        d = rg.integers(0, _DRAW_SPAN, size=take, dtype=np.int64) >> 40
        dx = (d == 0).astype(np.int64)
        dx -= d == 1
        dy = (d == 2).astype(np.int64)
        dy -= d == 3
        np.cumsum(dx, out=dx)
        np.cumsum(dy, out=dy)
        xs[done + 1:done + 1 + take] = x + dx
        ys[done + 1:done + 1 + take] = y + dy
        x = int(xs[done + take])
        y = int(ys[done + take])
        done += take
    return np.stack([xs, ys], axis=1)


def run_erw_detailed(params: WalkParams, n: int, rng,
                     step_budget: int | None = None) -> ErwRun:
    """Excited random walk of n steps with fresh-time bookkeeping."""
    _check_budget(n, step_budget)
    rg = make_rng(rng)
    x, y = params.start
    m, shift, h = _packing(n, params.start)
    key = x * m + y + h
    region = params.initial_region
    # half-plane sentinel below any reachable x when no half-plane is set
    half = region.half_plane_threshold
    half_eff = half if half is not None else x - n - 1
    # pre-visited extra points fold into the seen-set; they never hold cookies
    seen = {px * m + py + h
            for px, py in region.extra_points if -h <= py < h}
    cookies = params.cookies_per_site
    counters: dict[int, int] | None = {} if (
        cookies > 1 and params.drift_variant is DriftVariant.FRESH_DRIFT) else None
    if params.drift_variant is DriftVariant.PAPER_LITERAL:
        t_fresh, t_seen = _T_FLAT, _T_FLAT + 4 * params.eps_num
    else:
        t_fresh, t_seen = _T_FLAT + 4 * params.eps_num, _T_FLAT

    keys = [key]
    fresh_times: list[int] = []
    append = keys.append
    seen_add = seen.add
    ft_append = fresh_times.append
    cookies_m1 = cookies - 1

    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        t = 0
        remaining = n
        while remaining:
            take = min(_BLOCK, remaining)
            remaining -= take
            for u in rg.integers(0, _DRAW_SPAN, size=take, dtype=np.int64).tolist():
                if x <= half_eff:
                    t1 = t_seen
                elif key in seen:
                    if counters is None:
                        t1 = t_seen
                    else:
                        c = counters.get(key)
                        if c:
                            t1 = t_fresh
                            if c == 1:
                                del counters[key]
                            else:
                                counters[key] = c - 1
                        else:
                            t1 = t_seen
                else:
                    seen_add(key)
                    ft_append(t)
                    t1 = t_fresh
                    if counters is not None and cookies_m1:
                        counters[key] = cookies_m1
                if u < t1:
                    x += 1
                    key += m
                elif u < _T_HALF:
                    x -= 1
                    key -= m
                elif u < _T_3Q:
                    y += 1
                    key += 1
                else:
                    y -= 1
                    key -= 1
                append(key)
                t += 1
        if x > half_eff and key not in seen:
            ft_append(n)
    finally:
        if gc_was_on:
            gc.enable()

    arr = np.fromiter(keys, dtype=np.int64, count=len(keys))
    path = np.stack([arr >> shift, (arr & (m - 1)) - h], axis=1)
    return ErwRun(path=path, fresh_times=np.asarray(fresh_times, dtype=np.int64))


def run_erw(params: WalkParams, n: int, rng,
            step_budget: int | None = None) -> np.ndarray:
    """Excited random walk of n steps; returns the (n+1, 2) path."""
    return run_erw_detailed(params, n, rng, step_budget=step_budget).path


def run_coupled(params: WalkParams, n: int, rng,
                step_budget: int | None = None) -> CoupledTrajectory:
    """Run the coupled excited/simple pair.

    At a drift site one draw decides activation: with probability 2*epsilon
    the excited walker steps right while the simple one steps left;
    otherwise (and at non-drift sites) a single draw gives both walkers the
    same uniform step.  Defined for the cookie semantics only.
    """
    if params.drift_variant is not DriftVariant.FRESH_DRIFT:
        raise VariantError("run_coupled requires DriftVariant.FRESH_DRIFT")
    _check_budget(n, step_budget)
    rg = make_rng(rng)

    ex, y = params.start
    sx = ex
    m, _shift, h = _packing(n, params.start)
    key = ex * m + y + h
    region = params.initial_region
    half = region.half_plane_threshold
    half_eff = half if half is not None else ex - n - 1
    seen = {px * m + py + h
            for px, py in region.extra_points if -h <= py < h}
    cookies = params.cookies_per_site
    counters: dict[int, int] | None = {} if cookies > 1 else None
    cookies_m1 = cookies - 1
    t_act = 8 * params.eps_num  # 2*epsilon of the draw span

    exs = [ex]
    sxs = [sx]
    ys = [y]
    fresh_times: list[int] = []
    xi: list[int] = []
    acts = 0

    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        t = 0
        remaining = n
        while remaining:
            take = min(_BLOCK, remaining)
            remaining -= take
            buf = rg.integers(0, _DRAW_SPAN, size=2 * take, dtype=np.int64).tolist()
            bi = 0
            for _ in range(take):
                fresh = False
                if ex <= half_eff:
                    drift = False
                elif key in seen:
                    if counters is None:
                        drift = False
                    else:
                        c = counters.get(key)
                        if c:
                            drift = True
                            if c == 1:
                                del counters[key]
                            else:
                                counters[key] = c - 1
                        else:
                            drift = False
                else:
                    seen.add(key)
                    fresh_times.append(t)
                    fresh = True
                    drift = True
                    if counters is not None and cookies_m1:
                        counters[key] = cookies_m1
                if drift:
                    a = buf[bi]
                    bi += 1
                    if a < t_act:
                        ex += 1
                        key += m
                        sx -= 1
                        acts += 1
                        if fresh:
                            xi.append(2)
                        exs.append(ex)
                        sxs.append(sx)
                        ys.append(y)
                        t += 1
                        continue
                    if fresh:
                        xi.append(0)
                u = buf[bi]
                bi += 1
                d = u >> 40
                if d == 0:
                    ex += 1
                    key += m
                    sx += 1
                elif d == 1:
                    ex -= 1
                    key -= m
                    sx -= 1
                elif d == 2:
                    y += 1
                    key += 1
                else:
                    y -= 1
                    key -= 1
                exs.append(ex)
                sxs.append(sx)
                ys.append(y)
                t += 1
        if ex > half_eff and key not in seen:
            fresh_times.append(n)
    finally:
        if gc_was_on:
            gc.enable()

    ex_arr = np.asarray(exs, dtype=np.int64)
    sx_arr = np.asarray(sxs, dtype=np.int64)
    y_arr = np.asarray(ys, dtype=np.int64)
    return CoupledTrajectory(
        erw_path=np.stack([ex_arr, y_arr], axis=1),
        srw_path=np.stack([sx_arr, y_arr], axis=1),
        gap=ex_arr - sx_arr,
        fresh_times=np.asarray(fresh_times, dtype=np.int64),
        xi=np.asarray(xi, dtype=np.int64),
        activation_count=acts,
    )


def fresh_site_times(path, region: InitialRegion = EMPTY_REGION) -> np.ndarray:
    """Indices t with path[t] outside both the earlier path and the region.

    Index 0 counts when the start itself is outside the region.
    """
    pts = np.asarray(path, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("path must be a nonempty sequence of lattice points")
    out: list[int] = []
    seen: set[tuple[int, int]] = set()
    for t, (x, y) in enumerate(zip(pts[:, 0].tolist(), pts[:, 1].tolist())):
        p = (x, y)
        if p in seen:
            continue
        seen.add(p)
        if p not in region:
            out.append(t)
    return np.asarray(out, dtype=np.int64)
