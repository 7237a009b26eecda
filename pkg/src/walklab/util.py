"""Small shared helpers."""

from __future__ import annotations

import math

ARTIFACT_NAME = "walklab"
ARTIFACT_VERSION = "0.1.0"


def clamped_log(x: float) -> float:
    """Natural log clamped below at 1: max(ln x, 1)."""
    return max(math.log(x), 1.0)


def ceil_pow(n: int, num: int, den: int) -> int:
    """ceil(n^(num/den)) for positive integers, exact at integer powers.

    Computed from floats, then corrected with exact integer comparisons of
    m^den vs n^num so float rounding at the boundary cannot leak through.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    m = math.ceil(n ** (num / den))
    while m > 1 and (m - 1) ** den >= n ** num:
        m -= 1
    while m ** den < n ** num:
        m += 1
    return m


def fmt_float(x: float) -> str:
    """17 significant digits; round-trips any float64."""
    return format(x, ".17g")
