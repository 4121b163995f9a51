"""Minimax detection thresholds for the top sample eigenvalue.

The threshold T equalizes the worst-case costs of the two error kinds:
flagging noise as signal (inclusion, cost c_I, probability governed by
the Tracy-Widom null law) and missing a signal of minimal strength
lambda0 (exclusion, cost c_E, probability governed by the Normal spiked
law).  The equalizing T is the unique root of a strictly monotone
equation, found by bisection.

The *_margin_* functions give closed-form leading-order behavior of the
standardized threshold when lambda0 sits a margin h above the
detectability boundary sqrt(gamma): `small_margin_threshold` covers
h = o(N^{-1/3}) and `critical_margin_threshold` the critical scaling
h = h0 N^{-1/3}.  Both follow the unit-noise convention (sigma2 = 1);
callers rescale eigenvalues by 1/sigma2 first.  These formulas are
loose by construction (leading order only) and sit alongside, never
inside, the exact solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rmt_model import (
    NoiseModel,
    null_standardization,
    spiked_standardization,
)
from .specfun import std_normal_cdf, std_normal_quantile
from .tracy_widom import tw_cdf, tw_pdf, tw_quantile, tw_table

__all__ = [
    "ThresholdProblem",
    "ThresholdSolution",
    "BracketError",
    "solve_minimax_threshold",
    "small_margin_threshold",
    "critical_margin_threshold",
    "CriticalMarginThreshold",
    "BoundaryExpansion",
    "boundary_expansion",
]

_RESIDUAL_RTOL = 1e-10
_MAX_BISECT = 200


class BracketError(RuntimeError):
    """No sign change in the threshold bracket (degenerate costs?)."""


@dataclass(frozen=True)
class ThresholdProblem:
    """Inputs of the threshold equation.

    lambda0 is the weakest signal strength the detector is asked to
    protect; it must sit strictly above the detectability boundary or
    no threshold separates it from noise.
    """

    noise: NoiseModel
    lambda0: float
    c_I: float
    c_E: float

    def __post_init__(self) -> None:
        boundary = math.sqrt(self.noise.gamma) * self.noise.sigma2
        if not self.lambda0 > boundary:
            raise ValueError(
                f"lambda0={self.lambda0} must exceed the detectability "
                f"boundary {boundary:.6g}"
            )
        if not (self.c_I > 0.0 and self.c_E > 0.0):
            raise ValueError("both costs must be positive")


@dataclass(frozen=True)
class ThresholdSolution:
    T: float
    t: float
    residual: float
    max_risk: float


def _risk_gap(problem: ThresholdProblem, T: float) -> tuple[float, float, float]:
    """(null risk, miss risk, difference) at threshold T."""
    table = tw_table(problem.noise.beta)
    mu0, sd0 = null_standardization(problem.noise)
    mu1, sd1 = spiked_standardization(problem.noise, problem.lambda0)
    null_risk = problem.c_I * (1.0 - tw_cdf(table, (T - mu0) / sd0))
    miss_risk = problem.c_E * std_normal_cdf((T - mu1) / sd1)
    return null_risk, miss_risk, null_risk - miss_risk


def solve_minimax_threshold(problem: ThresholdProblem) -> ThresholdSolution:
    """Equalize inclusion and exclusion risks by bisection on T.

    The gap (null risk minus miss risk) is strictly decreasing in T, so
    the root is unique.  The initial bracket spans ten standard
    deviations beyond each standardization's center and is widened
    geometrically if the costs push the root outside it.
    """
    mu0, sd0 = null_standardization(problem.noise)
    mu1, sd1 = spiked_standardization(problem.noise, problem.lambda0)
    lo = mu0 - 10.0 * sd0
    hi = mu1 + 10.0 * sd1
    gap_lo = _risk_gap(problem, lo)[2]
    gap_hi = _risk_gap(problem, hi)[2]
    for _ in range(60):
        if gap_lo > 0.0 >= gap_hi:
            break
        span = hi - lo
        if gap_lo <= 0.0:
            lo -= span
            gap_lo = _risk_gap(problem, lo)[2]
        if gap_hi > 0.0:
            hi += span
            gap_hi = _risk_gap(problem, hi)[2]
    else:
        raise BracketError(
            f"no sign change in threshold bracket [{lo:.6g}, {hi:.6g}]"
        )

    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _risk_gap(problem, mid)[2] > 0.0:
            lo = mid
        else:
            hi = mid
    T = 0.5 * (lo + hi)
    null_risk, miss_risk, gap = _risk_gap(problem, T)
    residual = abs(gap)
    bound = _RESIDUAL_RTOL * (problem.c_I + problem.c_E)
    if residual > bound:
        raise BracketError(
            f"threshold residual {residual:.3e} exceeds {bound:.3e}"
        )
    return ThresholdSolution(
        T=T,
        t=(T - mu0) / sd0,
        residual=residual,
        max_risk=max(null_risk, miss_risk),
    )


def _require_unit_noise(noise: NoiseModel, op: str) -> None:
    if noise.sigma2 != 1.0:
        raise ValueError(
            f"{op} uses the unit-noise convention; rescale inputs by "
            f"1/sigma2 (got sigma2={noise.sigma2})"
        )


def _gamma_quarter_sum(gamma: float) -> float:
    return gamma**0.25 + gamma**-0.25


def small_margin_threshold(
    h: float, noise: NoiseModel, c_I: float, c_E: float
) -> float:
    """Leading-order standardized threshold for margins h = o(N^{-1/3}).

    Three regimes, split by the cost ratio against the mass the null law
    puts above zero.  The balanced regime solves an implicit equation in
    t^2; it is solved by bisection (increasing left side, decreasing
    right side), which stays robust where fixed-point iteration loses
    its contraction as h^3 N -> 0.
    """
    if not h > 0.0:
        raise ValueError(f"margin h must be > 0, got {h}")
    if not (c_I > 0.0 and c_E > 0.0):
        raise ValueError("costs must be positive")
    _require_unit_noise(noise, "small_margin_threshold")
    table = tw_table(noise.beta)
    beta = noise.beta
    gq = _gamma_quarter_sum(noise.gamma)
    scale = (h**3 * noise.N / gq) ** (1.0 / 6.0)  # -> 0 in this regime
    mass_above_zero = 1.0 - tw_cdf(table, 0.0)

    ratio = c_E / c_I
    if abs(ratio - mass_above_zero) <= 1e-12:
        # balanced costs: t^2 = K exp(-(beta/8) t^2 / scale^2)
        K = (
            (1.0 / tw_pdf(table, 0.0))
            * ratio
            * math.sqrt(2.0 / (beta * math.pi))
            * scale
        )
        decay = beta / (8.0 * scale * scale)
        lo, hi = 0.0, K
        while hi - lo > 1e-10 * max(1.0, K):
            u = 0.5 * (lo + hi)
            if u < K * math.exp(-decay * u):
                lo = u
            else:
                hi = u
        return math.sqrt(0.5 * (lo + hi))
    if ratio > mass_above_zero:
        return (
            2.0
            / math.sqrt(beta)
            * scale
            * std_normal_quantile(mass_above_zero / ratio)
        )
    t_edge = tw_quantile(table, 1.0 - ratio)
    correction = (
        (1.0 / tw_pdf(table, t_edge))
        * ratio
        * math.sqrt(2.0 / (beta * math.pi))
        * scale
        / t_edge
        * math.exp(-beta * t_edge**2 / (8.0 * scale * scale))
    )
    return t_edge + correction


@dataclass(frozen=True)
class CriticalMarginThreshold:
    """Standardized threshold at critical margin scaling, with the two
    extreme cost-ratio limits (NaN when the respective log is not yet
    positive)."""

    t: float
    exclusion_dominant_limit: float
    inclusion_dominant_limit: float


def critical_margin_threshold(
    h0: float, noise: NoiseModel, c_I: float, c_E: float
) -> CriticalMarginThreshold:
    """Standardized threshold for the critical margin h = h0 N^{-1/3}.

    Solves c_I (1 - F_beta(t)) = c_E Phi(a t - b) by bisection, where a
    and b follow from expanding the spiked standardization at the
    boundary.  Also reports the closed-form limits for c_E >> c_I and
    c_E << c_I.
    """
    if not h0 > 0.0:
        raise ValueError(f"margin constant h0 must be > 0, got {h0}")
    if not (c_I > 0.0 and c_E > 0.0):
        raise ValueError("costs must be positive")
    _require_unit_noise(noise, "critical_margin_threshold")
    table = tw_table(noise.beta)
    beta = noise.beta
    gq = _gamma_quarter_sum(noise.gamma)
    a = math.sqrt(beta) / (2.0 * math.sqrt(h0)) * gq ** (1.0 / 6.0)
    b = math.sqrt(beta) * h0**1.5 / (math.sqrt(2.0 * noise.gamma) * gq)

    def gap(t: float) -> float:
        return c_I * (1.0 - tw_cdf(table, t)) - c_E * std_normal_cdf(a * t - b)

    lo, hi = -50.0, 50.0
    for _ in range(60):
        if gap(lo) > 0.0 >= gap(hi):
            break
        lo *= 2.0
        hi *= 2.0
    else:
        raise BracketError("no sign change for the critical-margin equation")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)

    log_ei = math.log(c_E / c_I)
    exclusion_limit = (
        -math.sqrt(8.0 * h0 / (beta * gq ** (1.0 / 6.0)) * log_ei)
        if log_ei > 0.0
        else math.nan
    )
    inclusion_limit = (
        (3.0 / (2.0 * beta) * -log_ei) ** (2.0 / 3.0)
        if log_ei < 0.0
        else math.nan
    )
    return CriticalMarginThreshold(
        t=t,
        exclusion_dominant_limit=exclusion_limit,
        inclusion_dominant_limit=inclusion_limit,
    )


@dataclass(frozen=True)
class BoundaryExpansion:
    """Small-margin expansion of the spiked standardization at sqrt(gamma)+h.

    mean_shift is the quadratic excess of the spiked center over the
    null center; sd is the leading small-h standard deviation.  Both
    follow the unit-noise convention.
    """

    h: float
    noise: NoiseModel
    mean_shift: float
    sd: float

    def standardized_argument(self, t: float) -> float:
        """(T(t) - mu(sqrt(gamma)+h)) / sd(sqrt(gamma)+h), expanded.

        Valid for h = O(N^{-1/2}); keeps the two leading terms.
        """
        if self.h == 0.0:
            raise ValueError("standardized argument undefined at h = 0")
        beta = self.noise.beta
        gq = _gamma_quarter_sum(self.noise.gamma)
        cube = self.h**3 * self.noise.N
        return math.sqrt(beta) * 0.5 * t * (gq / cube) ** (
            1.0 / 6.0
        ) - math.sqrt(beta / (2.0 * self.noise.gamma)) * math.sqrt(cube) / gq


def boundary_expansion(h: float, noise: NoiseModel) -> BoundaryExpansion:
    """Expand the spiked standardization a margin h above the boundary."""
    if h < 0.0:
        raise ValueError(f"margin h must be >= 0, got {h}")
    _require_unit_noise(noise, "boundary_expansion")
    gq = _gamma_quarter_sum(noise.gamma)
    return BoundaryExpansion(
        h=h,
        noise=noise,
        mean_shift=h * h / math.sqrt(noise.gamma),
        sd=2.0 / math.sqrt(noise.beta) * gq * math.sqrt(h / noise.N),
    )
