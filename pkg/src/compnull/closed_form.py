"""Closed-form test constructors for the product null hypothesis.

Builds the minimax-optimal region of diagonal/antidiagonal squares (unit
fraction levels), its extension to arbitrary levels, and the two baseline
tests (joint significance, Sobel) that the optimal constructions are
benchmarked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .regions import OutsideRule, RejectionRegion2D, TestStatisticPair, WeightedRect, _as_xy
from .statmath import Interval, std_normal_cdf, std_normal_quantile

__all__ = [
    "AlphaSpec",
    "build_minimax_region",
    "build_extended_region",
    "build_js_region",
    "origin_type1",
    "js_test",
    "sobel_test",
    "JsTestResult",
    "SobelTestResult",
]

_UNIT_FRACTION_TOL = 1e-9


@dataclass(frozen=True)
class AlphaSpec:
    """A test level with unit-fraction detection.

    ``k`` is the integer with alpha ~= 1/k when alpha is a unit fraction
    (within 1e-9 of an integer reciprocal), else None.
    """

    alpha: float
    k: int | None

    @classmethod
    def from_alpha(cls, alpha: float) -> "AlphaSpec":
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
        inv = 1.0 / alpha
        k = round(inv)
        if k >= 1 and abs(inv - k) <= _UNIT_FRACTION_TOL:
            return cls(alpha, k)
        return cls(alpha, None)

    @property
    def unit_fraction(self) -> bool:
        return self.k is not None


def _coerce_alpha(alpha) -> AlphaSpec:
    if isinstance(alpha, AlphaSpec):
        return alpha
    return AlphaSpec.from_alpha(alpha)


def _floor_inv(alpha: float) -> int:
    """floor(1/alpha), snapped to the nearest integer when within tolerance."""
    inv = 1.0 / alpha
    k = round(inv)
    if abs(inv - k) <= _UNIT_FRACTION_TOL:
        return k
    return math.floor(inv)


def build_minimax_region(alpha) -> RejectionRegion2D:
    """Minimax-optimal rejection region for a unit-fraction level.

    The region is the union over k = 1..2K of the diagonal squares
    (a_{k-1}, a_k)^2 and the antidiagonal squares (a_{k-1}, a_k) x
    (-a_k, -a_{k-1}), where a_j is the j/(2K) standard-normal quantile.
    The two infinite tails are ordinary cells; there is no outside rule.
    """
    spec = _coerce_alpha(alpha)
    if not spec.unit_fraction:
        raise ValueError(
            f"alpha={spec.alpha!r} is not a unit fraction 1/K; "
            "use build_extended_region for arbitrary levels")
    k2 = 2 * spec.k
    # Build the upper half of the breakpoint ladder and mirror it exactly,
    # so the region is bit-for-bit symmetric under sign flips.
    ladder = [0.0] * (k2 + 1)
    for j in range(spec.k, k2 + 1):
        ladder[j] = std_normal_quantile(j / k2)
    for j in range(spec.k):
        ladder[j] = -ladder[k2 - j]

    cells = []
    for k in range(1, k2 + 1):
        x = Interval(ladder[k - 1], ladder[k])
        cells.append(WeightedRect(x, x))
        cells.append(WeightedRect(x, Interval(-ladder[k], -ladder[k - 1])))
    return RejectionRegion2D(spec.alpha, "minimax", cells)


def extended_breakpoints(alpha: float) -> list[float]:
    """Folded breakpoint ladder of the extended region: 0 = b_0 < ... < inf.

    Consecutive breakpoints carve |z| into floor(1/alpha)+1 bands; the
    innermost band has two-sided mass 1 - floor(1/alpha)*alpha (zero, hence
    dropped, at unit fractions) and every other band has mass alpha.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    m = _floor_inv(alpha)
    unit = abs(m * alpha - 1.0) <= _UNIT_FRACTION_TOL
    ladder = [0.0]
    for k in range(1 if unit else 0, m + 1):
        ladder.append(std_normal_quantile(1.0 - (m - k) * alpha / 2.0))
    return ladder


def build_extended_region(alpha: float) -> RejectionRegion2D:
    """Level-preserving extension of the minimax region to any alpha in (0, 1).

    Four quadrant families of squares between consecutive folded breakpoints;
    at unit-fraction alpha this equals build_minimax_region(alpha) as a set
    (the cell decomposition differs: four sign quadrants instead of two
    diagonal families).
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    ladder = extended_breakpoints(alpha)
    cells = []
    for k in range(1, len(ladder)):
        lo, hi = ladder[k - 1], ladder[k]
        if lo == hi:
            continue
        pos = Interval(lo, hi)
        neg = Interval(-hi, -lo)
        for x in (pos, neg):
            for y in (pos, neg):
                cells.append(WeightedRect(x, y))
    return RejectionRegion2D(alpha, "extended", cells)


def build_js_region(alpha: float) -> RejectionRegion2D:
    """Joint-significance region: reject iff both |z| exceed the two-sided cutoff."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    threshold = std_normal_quantile(1.0 - alpha / 2.0)
    return RejectionRegion2D(alpha, "joint_significance", [], OutsideRule(threshold))


def origin_type1(alpha: float) -> float:
    """Exact type-1 error of the extended region at delta* = (0, 0).

    Equals floor(1/alpha)*alpha^2 + (1 - floor(1/alpha)*alpha)^2, which is
    <= alpha with equality exactly at unit fractions.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    m = _floor_inv(alpha)
    return m * alpha * alpha + (1.0 - m * alpha) ** 2


@dataclass(frozen=True)
class JsTestResult:
    reject: bool
    p_value: float
    threshold: float


def js_test(z, alpha: float) -> JsTestResult:
    """Joint significance (intersection-union) test.

    Rejects iff both |zx| and |zy| strictly exceed the two-sided cutoff;
    the p-value is the larger of the two two-sided normal p-values.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    zx, zy = _as_xy(z)
    threshold = std_normal_quantile(1.0 - alpha / 2.0)
    reject = abs(zx) > threshold and abs(zy) > threshold
    p = max(2.0 * std_normal_cdf(-abs(zx)), 2.0 * std_normal_cdf(-abs(zy)))
    return JsTestResult(reject, min(1.0, p), threshold)


@dataclass(frozen=True)
class SobelTestResult:
    statistic: float
    p_value: float
    reject: bool
    degenerate: bool


def sobel_test(delta_x_hat: float, delta_y_hat: float, se_x: float, se_y: float,
               n: int, alpha: float = 0.05) -> SobelTestResult:
    """Delta-method (Sobel) test of the product of the two estimates.

    ``se_x``/``se_y`` are on the sqrt(n)-scale: the standard deviations of
    sqrt(n)*(estimate - truth). Z = sqrt(n)*dx*dy / sqrt(dy^2 se_x^2 +
    dx^2 se_y^2). Both estimates zero makes the denominator vanish; that
    degenerate case reports Z=0, p=1 with a flag instead of an error.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if se_x <= 0.0 or se_y <= 0.0:
        raise ValueError("standard errors must be positive")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    dx = float(delta_x_hat)
    dy = float(delta_y_hat)
    denom = math.hypot(dy * se_x, dx * se_y)
    if denom == 0.0:
        return SobelTestResult(0.0, 1.0, False, True)
    stat = math.sqrt(n) * dx * dy / denom
    p = min(1.0, 2.0 * std_normal_cdf(-abs(stat)))
    reject = abs(stat) > std_normal_quantile(1.0 - alpha / 2.0)
    return SobelTestResult(stat, p, reject, False)
