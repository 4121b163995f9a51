"""Sequential minimax rank selection over sample-covariance spectra.

Each candidate index i carries its own threshold T(i), solved from the
minimax equation with the inclusion cost c_I against the cumulative
exclusion cost C_E(i) (the total cost paid if the search stopped just
short of every remaining signal).  The estimate is the first index whose
eigenvalue fails its threshold; eigenvalues past the stop are never
consulted.

A fixed-false-alarm baseline selector using a single Tracy-Widom
quantile threshold is provided for comparison, and a small stateful
tracker couples the selector to a sliding snapshot window with the
noise variance re-estimated from the previous step's noise eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .linalg_cov import (
    EigenSystem,
    Snapshot,
    SnapshotWindow,
    hermitian_eig,
    push_snapshot,
    sample_covariance,
)
from .minimax_threshold import ThresholdProblem, solve_minimax_threshold
from .rmt_model import NoiseModel, null_standardization
from .tracy_widom import tw_quantile, tw_table

__all__ = [
    "CostSchedule",
    "ThresholdSequence",
    "RankEstimate",
    "cumulative_exclusion_costs",
    "build_threshold_sequence",
    "estimate_rank",
    "estimate_noise_variance",
    "kn_estimate_rank",
    "default_lambda0",
    "RankTracker",
    "TrackerStep",
]


@dataclass(frozen=True)
class CostSchedule:
    """Inclusion cost plus one exclusion cost per candidate index."""

    c_I: float
    c_E: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.c_I > 0.0:
            raise ValueError(f"c_I must be > 0, got {self.c_I}")
        costs = tuple(float(c) for c in self.c_E)
        if any(c < 0.0 for c in costs):
            raise ValueError("exclusion costs must be nonnegative")
        if not any(c > 0.0 for c in costs):
            raise ValueError("at least one exclusion cost must be positive")
        object.__setattr__(self, "c_E", costs)

    @staticmethod
    def equal_unit(n: int) -> "CostSchedule":
        return CostSchedule(c_I=1.0, c_E=(1.0,) * n)

    @staticmethod
    def capped(n: int, r_max: int, cost: float = 1.0) -> "CostSchedule":
        """Exclusion costs zero past r_max, capping the estimate there."""
        if not 0 < r_max <= n:
            raise ValueError(f"r_max must be in [1, {n}], got {r_max}")
        return CostSchedule(
            c_I=1.0, c_E=(cost,) * r_max + (0.0,) * (n - r_max)
        )


@dataclass(frozen=True)
class ThresholdSequence:
    """Raw-scale thresholds T(i), +inf where the exclusion budget is zero."""

    T: tuple[float, ...]
    noise: NoiseModel
    lambda0: float
    schedule: CostSchedule


@dataclass(frozen=True)
class RankEstimate:
    r_hat: int
    decisions: tuple[bool, ...]
    eigenvalues: tuple[float, ...]


def cumulative_exclusion_costs(schedule: CostSchedule) -> tuple[float, ...]:
    """Suffix sums C_E(j) = sum of c_E(i) for i >= j; nonincreasing."""
    out: list[float] = []
    total = 0.0
    for c in reversed(schedule.c_E):
        total += c
        out.append(total)
    return tuple(reversed(out))


def build_threshold_sequence(
    noise: NoiseModel, lambda0: float, schedule: CostSchedule
) -> ThresholdSequence:
    """Solve one minimax threshold per index against its suffix cost."""
    if len(schedule.c_E) != noise.n:
        raise ValueError(
            f"schedule length {len(schedule.c_E)} does not match n={noise.n}"
        )
    thresholds: list[float] = []
    for suffix_cost in cumulative_exclusion_costs(schedule):
        if suffix_cost == 0.0:
            thresholds.append(math.inf)
            continue
        problem = ThresholdProblem(
            noise=noise, lambda0=lambda0, c_I=schedule.c_I, c_E=suffix_cost
        )
        thresholds.append(solve_minimax_threshold(problem).T)
    return ThresholdSequence(
        T=tuple(thresholds), noise=noise, lambda0=lambda0, schedule=schedule
    )


def estimate_rank(
    eigensystem: EigenSystem, thresholds: ThresholdSequence
) -> RankEstimate:
    """First index whose eigenvalue fails its threshold, minus one.

    Strictly sequential: once ell_i <= T(i) the scan stops, and any later
    exceedance is ignored.
    """
    eigvals = tuple(float(v) for v in eigensystem.eigenvalues)
    n = len(eigvals)
    if len(thresholds.T) < n:
        raise ValueError(
            f"threshold sequence length {len(thresholds.T)} shorter than n={n}"
        )
    decisions = tuple(
        eigvals[i] > thresholds.T[i] for i in range(n)
    )
    r_hat = 0
    while r_hat < n and decisions[r_hat]:
        r_hat += 1
    return RankEstimate(r_hat=r_hat, decisions=decisions, eigenvalues=eigvals)


def estimate_noise_variance(eigensystem: EigenSystem, r_prev: int) -> float:
    """Mean of the n - r_prev smallest eigenvalues."""
    n = len(eigensystem.eigenvalues)
    if not 0 <= r_prev < n:
        raise ValueError(f"r_prev must be in [0, {n - 1}], got {r_prev}")
    tail = eigensystem.eigenvalues[r_prev:]
    return float(sum(tail) / len(tail))


def kn_estimate_rank(
    eigensystem: EigenSystem, noise: NoiseModel, false_alarm: float
) -> RankEstimate:
    """Fixed-false-alarm baseline: one Tracy-Widom quantile threshold.

    Applies the same sequential scan as estimate_rank with the single
    threshold T = mu + sd * F_beta^{-1}(1 - false_alarm) at every index.
    """
    if not 0.0 < false_alarm < 1.0:
        raise ValueError(f"false_alarm must be in (0, 1), got {false_alarm}")
    mu, sd = null_standardization(noise)
    T = mu + sd * tw_quantile(tw_table(noise.beta), 1.0 - false_alarm)
    n = len(eigensystem.eigenvalues)
    schedule = CostSchedule.equal_unit(n)
    seq = ThresholdSequence(
        T=(T,) * n, noise=noise, lambda0=math.inf, schedule=schedule
    )
    return estimate_rank(eigensystem, seq)


def default_lambda0(noise: NoiseModel) -> float:
    """Weakest protected signal: boundary plus an N^{-1/3} standoff."""
    return (math.sqrt(noise.gamma) + noise.N ** (-1.0 / 3.0)) * noise.sigma2


@dataclass(frozen=True)
class TrackerStep:
    """Per-step tracker output (None fields only during window warmup)."""

    time_index: int
    estimate: RankEstimate | None
    kn_estimate: RankEstimate | None
    sigma2: float | None
    eigensystem: EigenSystem | None


class RankTracker:
    """Sliding-window rank tracking with adaptive noise variance.

    The noise variance enters both the thresholds and lambda0; with the
    default boundary-standoff lambda0 the whole threshold sequence is
    degree-1 homogeneous in sigma2, so the sequence is solved once on
    the unit-noise scale and rescaled exactly at each step.  A fixed
    user lambda0 breaks that homogeneity; then the sequence is re-solved
    whenever the variance estimate drifts more than 0.1% from the last
    solve, and reused otherwise.

    No estimates are emitted until the window is full: the asymptotics
    behind the thresholds assume the full aspect ratio n/N, and a
    partially filled window has a different (larger) one.
    """

    def __init__(
        self,
        n: int,
        N: int,
        beta: int,
        schedule: CostSchedule | None = None,
        lambda0: float | None = None,
        kn_false_alarm: float = 0.005,
    ) -> None:
        self.schedule = schedule if schedule is not None else CostSchedule.equal_unit(n)
        if len(self.schedule.c_E) != n:
            raise ValueError("cost schedule length must equal n")
        self._window = SnapshotWindow(capacity=N, dimension=n, beta=beta)
        self._n, self._N, self._beta = n, N, beta
        self._fixed_lambda0 = lambda0
        self._kn_false_alarm = kn_false_alarm
        self._sigma2: float | None = None
        self._r_prev = 0
        self._solved_sigma2: float | None = None
        self._solved_seq: ThresholdSequence | None = None
        if lambda0 is None:
            base_noise = NoiseModel(n=n, N=N, sigma2=1.0, beta=beta)
            self._unit_seq = build_threshold_sequence(
                base_noise, default_lambda0(base_noise), self.schedule
            )
        else:
            self._unit_seq = None

    def _thresholds(self, noise: NoiseModel) -> ThresholdSequence:
        if self._unit_seq is not None:
            scaled = tuple(T * noise.sigma2 for T in self._unit_seq.T)
            return ThresholdSequence(
                T=scaled,
                noise=noise,
                lambda0=default_lambda0(noise),
                schedule=self.schedule,
            )
        assert self._fixed_lambda0 is not None
        if (
            self._solved_seq is None
            or abs(noise.sigma2 / self._solved_sigma2 - 1.0) > 1e-3
        ):
            self._solved_seq = build_threshold_sequence(
                noise, self._fixed_lambda0, self.schedule
            )
            self._solved_sigma2 = noise.sigma2
        return self._solved_seq

    @staticmethod
    def _floored(eig: EigenSystem, value: float) -> float:
        # a rank-deficient window can round the residual mean to <= 0;
        # clamp just above rounding scale so the noise model stays valid
        # (thresholds collapse toward 0 and real structure still trips them)
        floor = max(float(eig.eigenvalues[0]), 0.0) * 64.0 * 2.220446049250313e-16
        return max(value, floor, 2.2250738585072014e-308)

    def step(self, snapshot: Snapshot) -> TrackerStep:
        push_snapshot(self._window, snapshot)
        if len(self._window) < self._window.capacity:
            return TrackerStep(
                time_index=snapshot.time_index,
                estimate=None,
                kn_estimate=None,
                sigma2=None,
                eigensystem=None,
            )
        eig = hermitian_eig(sample_covariance(self._window))
        if self._sigma2 is None:
            # first full window: no previous rank, use the full spectrum
            self._sigma2 = self._floored(eig, estimate_noise_variance(eig, 0))
        noise = NoiseModel(
            n=self._n, N=self._N, sigma2=self._sigma2, beta=self._beta
        )
        est = estimate_rank(eig, self._thresholds(noise))
        kn = kn_estimate_rank(eig, noise, self._kn_false_alarm)
        out = TrackerStep(
            time_index=snapshot.time_index,
            estimate=est,
            kn_estimate=kn,
            sigma2=self._sigma2,
            eigensystem=eig,
        )
        # variance for the next step comes from this step's noise split
        self._r_prev = est.r_hat
        if est.r_hat < self._n:
            self._sigma2 = self._floored(
                eig, estimate_noise_variance(eig, est.r_hat)
            )
        return out
