"""Limit laws for sample-covariance eigenvalues under the spiked model.

Null (pure-noise) largest eigenvalues, standardized by the finite-(n, N)
centering and scale below, follow the Tracy-Widom law of the matching
field flag.  A signal eigenvalue lambda is detectable only above the
phase boundary sqrt(gamma) sigma^2; above it the top sample eigenvalue
is asymptotically Normal around a biased location, and below it the
sample eigenvalue is indistinguishable from the bulk edge.

All formulas are evaluated at the exact finite ratio gamma = n/N; the
asymptotics are accurate enough at the window sizes used here (n = 9,
N = 45) for the risk calculus built on top of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specfun import std_normal_cdf
from .tracy_widom import tw_cdf, tw_table

__all__ = [
    "NoiseModel",
    "SpikedModel",
    "SubcriticalError",
    "null_standardization",
    "spiked_standardization",
    "is_detectable",
    "bulk_edge",
    "eigenvector_overlap",
    "asymptotic_risk",
]


class SubcriticalError(ValueError):
    """Operation requires lambda strictly above the detectability boundary."""


@dataclass(frozen=True)
class NoiseModel:
    """Noise-only observation model: dimension n, window N, variance sigma2.

    gamma defaults to the exact ratio n/N; passing gamma=0.0 emulates the
    classical N >> n regime in the formulas that consume it.
    """

    n: int
    N: int
    sigma2: float
    beta: int
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1 or self.N < 1:
            raise ValueError(f"n and N must be >= 1, got n={self.n}, N={self.N}")
        if not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta!r}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.n / self.N)
        elif self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class SpikedModel:
    """Noise model plus strictly descending positive signal strengths."""

    noise: NoiseModel
    lambdas: tuple[float, ...]

    def __post_init__(self) -> None:
        lams = tuple(float(v) for v in self.lambdas)
        if len(lams) >= self.noise.n:
            raise ValueError(
                f"rank {len(lams)} must be below dimension {self.noise.n}"
            )
        if any(v <= 0.0 for v in lams):
            raise ValueError("signal strengths must be positive")
        if any(nxt >= prev for nxt, prev in zip(lams[1:], lams)):
            raise ValueError("signal strengths must be strictly descending")
        object.__setattr__(self, "lambdas", lams)

    @property
    def rank(self) -> int:
        return len(self.lambdas)


def null_standardization(noise: NoiseModel) -> tuple[float, float]:
    """Centering and scale of the largest pure-noise sample eigenvalue."""
    rn, rN = math.sqrt(noise.n), math.sqrt(noise.N)
    mu = noise.sigma2 / noise.N * (rn + rN) ** 2
    sd = noise.sigma2 / noise.N * (rn + rN) * (1.0 / rn + 1.0 / rN) ** (1.0 / 3.0)
    return mu, sd


def detectability_boundary(noise: NoiseModel) -> float:
    return math.sqrt(noise.gamma) * noise.sigma2


def is_detectable(noise: NoiseModel, lam: float) -> bool:
    """Whether a signal of strength lam separates from the bulk at all."""
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    return lam > detectability_boundary(noise)


def bulk_edge(noise: NoiseModel) -> float:
    """Almost-sure limit of the largest noise eigenvalue."""
    return noise.sigma2 * (1.0 + math.sqrt(noise.gamma)) ** 2


def spiked_standardization(noise: NoiseModel, lam: float) -> tuple[float, float]:
    """Normal centering and scale of the top eigenvalue above the boundary."""
    if not is_detectable(noise, lam):
        raise SubcriticalError(
            f"lambda={lam} is not above the detectability boundary "
            f"{detectability_boundary(noise):.6g}"
        )
    s2, g = noise.sigma2, noise.gamma
    mu = (lam + s2) * (1.0 + g * s2 / lam)
    sd = (lam + s2) * math.sqrt(
        2.0 / (noise.beta * noise.N) * (1.0 - g * s2 * s2 / (lam * lam))
    )
    return mu, sd


def eigenvector_overlap(noise: NoiseModel, lam: float) -> float:
    """Limiting |<population, sample>| eigenvector alignment; 0 below boundary."""
    if not lam > 0.0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if not is_detectable(noise, lam):
        return 0.0
    s2, g = noise.sigma2, noise.gamma
    return math.sqrt((lam - g * s2 * s2 / lam) / (lam + g * s2))


def asymptotic_risk(
    noise: NoiseModel,
    lam: float | None,
    T: float,
    c_I: float,
    c_E: float,
) -> float:
    """Limiting detection risk of thresholding the top eigenvalue at T.

    lam=None selects the noise-only branch: the cost of inclusion times
    the probability the top noise eigenvalue exceeds T.  A numeric lam
    (strictly above the boundary) selects the miss branch: the cost of
    exclusion times the probability the signal eigenvalue falls below T.
    """
    if not math.isfinite(T):
        raise ValueError(f"threshold must be finite, got {T}")
    if c_I < 0.0 or c_E < 0.0:
        raise ValueError("costs must be nonnegative")
    if lam is None:
        mu, sd = null_standardization(noise)
        return c_I * (1.0 - tw_cdf(tw_table(noise.beta), (T - mu) / sd))
    mu, sd = spiked_standardization(noise, lam)
    return c_E * std_normal_cdf((T - mu) / sd)
