"""Trajectory statistics: speed estimates, log-log exponent fits,
displacement envelopes, windowed progress, coupling audits, and the exact
binomial tail oracle paired with the rough 2(n*eps)^k bound.

The clamped-log convention max(ln x, 1) is applied wherever a log appears
in a statistics formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .util import clamped_log
from .walks import CoupledTrajectory, dyadic_epsilon

EXACT_TAIL_MAX_N = 10_000


class InsufficientDataError(ValueError):
    """Not enough replicas to form the requested estimate."""


@dataclass(frozen=True)
class RunSummary:
    """Per-replica scalar metrics; fields not produced by a preset are None."""

    replica_index: int
    epsilon: float
    n: int
    final_x: int
    final_y: int
    fresh_visit_count: int
    gap_final: int | None = None
    tan_count_total: int | None = None
    max_envelope_ratio: float | None = None
    windowed_progress_min: float | None = None

    def __post_init__(self) -> None:
        if self.gap_final is not None and (self.gap_final < 0 or self.gap_final % 2):
            raise ValueError("gap_final must be even and nonnegative")
        if self.tan_count_total is not None and not 0 <= self.tan_count_total <= self.n:
            raise ValueError("tan_count_total out of [0, n]")


class MetricSummary:
    """Mergeable aggregate of one metric: count/mean/M2/min/max plus the
    raw sample list, kept for exact quantiles at desk-scale replica counts."""

    __slots__ = ("count", "mean", "m2", "min", "max", "_values", "_sorted")

    def __init__(self) -> None:
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.min = math.inf
        self.max = -math.inf
        self._values: list[float] = []
        self._sorted = True

    def add(self, x: float) -> None:
        x = float(x)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)
        if x < self.min:
            self.min = x
        if x > self.max:
            self.max = x
        if self._values and x < self._values[-1]:
            self._sorted = False
        self._values.append(x)

    def merge(self, other: "MetricSummary") -> "MetricSummary":
        out = MetricSummary()
        total = self.count + other.count
        if total == 0:
            return out
        delta = other.mean - self.mean
        out.count = total
        out.mean = (self.count * self.mean + other.count * other.mean) / total
        out.m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / total
        out.min = min(self.min, other.min)
        out.max = max(self.max, other.max)
        out._values = self._values + other._values
        out._sorted = False
        return out

    @property
    def variance(self) -> float:
        """Sample variance; 0 for fewer than two samples."""
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else 0.0

    def quantile(self, q: float) -> float:
        if not self._values:
            raise InsufficientDataError("no samples")
        if not self._sorted:
            self._values.sort()
            self._sorted = True
        pos = q * (len(self._values) - 1)
        lo = math.floor(pos)
        hi = math.ceil(pos)
        if lo == hi:
            return self._values[lo]
        w = pos - lo
        return self._values[lo] * (1 - w) + self._values[hi] * w


class EnsembleSummary:
    """Named MetricSummary collection; merging is associative and
    commutative (exact for count, within float rounding for mean/M2)."""

    def __init__(self) -> None:
        self.metrics: dict[str, MetricSummary] = {}

    def add(self, name: str, value: float) -> None:
        acc = self.metrics.get(name)
        if acc is None:
            acc = self.metrics[name] = MetricSummary()
        acc.add(value)

    def merge(self, other: "EnsembleSummary") -> "EnsembleSummary":
        out = EnsembleSummary()
        for name in sorted(set(self.metrics) | set(other.metrics)):
            a = self.metrics.get(name)
            b = other.metrics.get(name)
            if a is None:
                merged = MetricSummary().merge(b)
            elif b is None:
                merged = a.merge(MetricSummary())
            else:
                merged = a.merge(b)
            out.metrics[name] = merged
        return out

    def __getitem__(self, name: str) -> MetricSummary:
        return self.metrics[name]

    def __contains__(self, name: str) -> bool:
        return name in self.metrics


@dataclass(frozen=True)
class SpeedEstimate:
    count: int
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    frac_nonpositive: float


def speed_estimate(summaries: Sequence[RunSummary], sigma: float = 3.0,
                   alpha: float | None = None) -> SpeedEstimate:
    """Mean of final_x/n with a normal-approximation CI.

    The CI half-width is sigma standard errors, or the two-sided normal
    quantile when ``alpha`` is given instead.
    """
    if len(summaries) < 2:
        raise InsufficientDataError("speed estimate needs >= 2 replicas")
    if alpha is not None:
        sigma = NormalDist().inv_cdf(1 - alpha / 2)
    acc = MetricSummary()
    nonpos = 0
    for s in summaries:
        acc.add(s.final_x / s.n)
        if s.final_x <= 0:
            nonpos += 1
    half = sigma * acc.stderr
    return SpeedEstimate(count=acc.count, mean=acc.mean, stderr=acc.stderr,
                         ci_low=acc.mean - half, ci_high=acc.mean + half,
                         frac_nonpositive=nonpos / acc.count)


@dataclass(frozen=True)
class ExponentFit:
    """Least squares on (log n, log metric)."""

    slope: float
    intercept: float
    r_squared: float
    residual_max: float
    points: tuple[tuple[float, float], ...]


def exponent_fit(points: Sequence[tuple[float, float]]) -> ExponentFit:
    """Ordinary least squares of log(metric) against log(n)."""
    if len(points) < 3:
        raise InsufficientDataError("exponent fit needs >= 3 points")
    for n, v in points:
        if n <= 0 or v <= 0:
            raise ValueError(f"exponent fit needs positive values, got ({n}, {v})")
    lx = [math.log(n) for n, _ in points]
    ly = [math.log(v) for _, v in points]
    k = len(points)
    mx = math.fsum(lx) / k
    my = math.fsum(ly) / k
    cx = [v - mx for v in lx]
    cy = [v - my for v in ly]
    sxx = math.fsum(a * a for a in cx)
    sxy = math.fsum(a * b for a, b in zip(cx, cy))
    if sxx == 0:
        raise ValueError("exponent fit needs at least two distinct n values")
    slope = sxy / sxx
    intercept = my - slope * mx
    residuals = [b - slope * a for a, b in zip(cx, cy)]
    ss_res = math.fsum(r * r for r in residuals)
    ss_tot = math.fsum(b * b for b in cy)
    r_squared = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return ExponentFit(slope=slope, intercept=intercept, r_squared=r_squared,
                       residual_max=max(abs(r) for r in residuals),
                       points=tuple(zip(lx, ly)))


@dataclass(frozen=True)
class EnvelopeReport:
    violation_count: int
    max_ratio: float
    pair_count: int


def envelope_violations(path) -> EnvelopeReport:
    """Check |x(j) - x(i)| <= log(n) * sqrt(j - i) over dyadic index pairs.

    Pairs are all (i, i+d) with d a power of two; this keeps the scan at
    O(n log n) while preserving the envelope's character.
    """
    pts = np.asarray(path, dtype=np.int64)
    n = len(pts) - 1
    if n < 1:
        raise ValueError("path must have at least one step")
    xs = pts[:, 0].astype(np.float64)
    logn = clamped_log(n)
    violations = 0
    max_ratio = 0.0
    pairs = 0
    d = 1
    while d <= n:
        diffs = np.abs(xs[d:] - xs[:-d])
        bound = logn * math.sqrt(d)
        violations += int((diffs > bound).sum())
        ratio = float(diffs.max()) / bound
        if ratio > max_ratio:
            max_ratio = ratio
        pairs += len(diffs)
        d *= 2
    return EnvelopeReport(violation_count=violations, max_ratio=max_ratio,
                          pair_count=pairs)


def bernoulli_tail_bound(n: int, eps, k: int, exact: bool = False):
    """The rough tail bound 2*(n*eps)^k; a valid upper bound for n*eps <= 1/2."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    p = Fraction(eps)
    if not 0 <= p <= 1:
        raise ValueError("eps must lie in [0, 1]")
    value = 2 * (n * p) ** k
    return value if exact else float(value)


def exact_binomial_tail(n: int, eps, k: int, exact: bool = False):
    """P(sum of n Bernoulli(eps) > k), summed exactly in rational arithmetic.

    Returns the correctly rounded float (or the Fraction itself with
    ``exact=True``).  Limited to n <= 10^4.
    """
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    if n > EXACT_TAIL_MAX_N:
        raise ValueError(f"exact summation limited to n <= {EXACT_TAIL_MAX_N}")
    p = Fraction(eps)
    if not 0 <= p <= 1:
        raise ValueError("eps must lie in [0, 1]")
    if k >= n:
        return Fraction(0) if exact else 0.0
    if p == 1:
        return Fraction(1) if exact else 1.0
    a, c = p.numerator, p.denominator
    b = c - a
    # term_j = C(n,j) * a^j * b^(n-j), advanced multiplicatively from j=k+1
    j = k + 1
    cmb = math.comb(n, j)
    apow = a ** j
    bpow = b ** (n - j)
    total = 0
    while True:
        total += cmb * apow * bpow
        if j == n:
            break
        cmb = cmb * (n - j) // (j + 1)
        apow *= a
        bpow //= b
        j += 1
    result = Fraction(total, c ** n)
    return result if exact else float(result)


@dataclass(frozen=True)
class WindowedProgress:
    min_progress: int
    argmin_index: int
    window: int
    sampled_indices: np.ndarray


def windowed_progress(path, n: int, m: int, window: int | None = None,
                      samples: int = 64) -> WindowedProgress:
    """Minimum of x(i + W) - max_{j<=i} x(j) over sampled i in [n, 2n - W].

    W is floor(m * log^6(2n)) unless an explicit ``window`` is supplied
    (the default horizon exceeds any desk-scale path; the explicit knob
    exists so the statistic can be measured at feasible scales).  Requires
    m >= n^(15/16) and a path of at least 2n steps.
    """
    pts = np.asarray(path, dtype=np.int64)
    if len(pts) < 2 * n + 1:
        raise ValueError(f"need a path of at least 2n={2 * n} steps")
    if m ** 16 < n ** 15:
        raise ValueError(f"need m >= n^(15/16), got m={m} for n={n}")
    w = math.floor(m * clamped_log(2 * n) ** 6) if window is None else int(window)
    i_hi = 2 * n - w
    if i_hi < n:
        raise ValueError(f"window {w} exceeds the path: no admissible i in "
                         f"[{n}, {i_hi}]")
    count = min(samples, i_hi - n + 1)
    sampled = np.unique(np.round(np.linspace(n, i_hi, count)).astype(np.int64))
    xs = pts[:, 0]
    prefix_max = np.maximum.accumulate(xs)
    progress = xs[sampled + w] - prefix_max[sampled]
    k = int(np.argmin(progress))
    return WindowedProgress(min_progress=int(progress[k]),
                            argmin_index=int(sampled[k]),
                            window=w, sampled_indices=sampled)


@dataclass(frozen=True)
class GapAudit:
    monotone: bool
    dominant: bool
    vertical_lock: bool
    gap_even: bool
    xi_identity: bool
    activations: int
    fresh_departures: int
    z_score: float

    @property
    def ok(self) -> bool:
        return (self.monotone and self.dominant and self.vertical_lock
                and self.gap_even and self.xi_identity)


def gap_audit(traj: CoupledTrajectory, eps) -> GapAudit:
    """Exact coupling checks plus the activation-rate z-score.

    Activations at fresh-site departures are Binomial(len(xi), 2*eps) by
    construction; the xi identity 2*#{xi=2} = gap(n) holds with one cookie
    per site.
    """
    gap = traj.gap
    diffs = np.diff(gap)
    acts = int(np.count_nonzero(traj.xi == 2))
    draws = int(len(traj.xi))
    p2 = 2 * float(Fraction(dyadic_epsilon(eps), 1 << 40))
    expected = draws * p2
    var = draws * p2 * (1 - p2)
    if var > 0:
        z = (acts - expected) / math.sqrt(var)
    else:
        z = 0.0 if acts == expected else math.inf
    return GapAudit(
        monotone=bool(np.all(diffs >= 0)),
        dominant=bool(np.all(gap >= 0)),
        vertical_lock=bool(np.array_equal(traj.erw_path[:, 1], traj.srw_path[:, 1])),
        gap_even=bool(np.all(gap % 2 == 0)),
        xi_identity=2 * acts == int(gap[-1]),
        activations=acts,
        fresh_departures=draws,
        z_score=z,
    )
