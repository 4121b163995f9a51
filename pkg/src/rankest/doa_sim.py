"""Direction-of-arrival tracking experiments on a uniform linear array.

Scenarios describe signals that appear and disappear while their
direction parameter drifts; snapshots are streamed through a sliding
window and both rank estimators run side by side.  Sources are drawn
i.i.d. circular complex Gaussian per snapshot (variance |C_0|^2), so
the population covariance is exactly A C_S A* + sigma^2 I.  The paper
this family of experiments comes from never pins down the source law;
Gaussian keeps the second-moment model exact.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, replace

import numpy as np

from .linalg_cov import Snapshot, hermitian_eig
from .rank_select import CostSchedule, RankTracker

_TWO_PI = 2.0 * math.pi

TRACE_COLUMNS = (
    "t",
    "r",
    "rhat_mm",
    "rhat_kn",
    "sigma2_hat",
    "err_r",
    "err_rhat_mm",
    "err_rhat_kn",
)
SWEEP_COLUMNS = ("rate", "mm_mean", "mm_sd", "kn_mean", "kn_sd")


class ScenarioFormatError(ValueError):
    """Raised when a scenario file cannot be parsed."""


@dataclass(frozen=True)
class SignalEvent:
    """One signal: active on [t_on, t_off), direction path piecewise linear.

    amplitude is C_0 > 0; the per-sensor signal power is amplitude**2 and
    the population spike of an isolated signal is n * amplitude**2.
    """

    t_on: float
    t_off: float
    omega_breakpoints: tuple[tuple[float, float], ...]
    amplitude: float

    def __post_init__(self) -> None:
        if not self.t_on < self.t_off:
            raise ValueError("t_on must be < t_off")
        if not self.amplitude > 0.0:
            raise ValueError("amplitude must be positive")
        pts = tuple((float(t), float(w)) for t, w in self.omega_breakpoints)
        if not pts:
            raise ValueError("omega path needs at least one breakpoint")
        for (t0, _), (t1, _) in zip(pts, pts[1:]):
            if not t0 < t1:
                raise ValueError("omega breakpoints must have increasing times")
        for _, w in pts:
            if not 0.0 <= w < _TWO_PI:
                raise ValueError("omega must lie in [0, 2*pi)")
        object.__setattr__(self, "omega_breakpoints", pts)

    def active(self, t: float) -> bool:
        return self.t_on <= t < self.t_off

    def omega(self, t: float) -> float:
        # constant extrapolation outside the breakpoint range
        times = [p[0] for p in self.omega_breakpoints]
        omegas = [p[1] for p in self.omega_breakpoints]
        return float(np.interp(t, times, omegas))

    @property
    def power(self) -> float:
        return self.amplitude * self.amplitude


@dataclass(frozen=True)
class Scenario:
    """A tracking experiment: array size, timing, noise floor and events.

    window_N is the snapshot count of the covariance window at this
    scenario's own sampling_rate; the window therefore spans
    window_N / sampling_rate time units, and that span is what stays
    fixed when the sweep changes the rate.
    """

    n: int
    horizon: float
    sampling_rate: float
    window_N: int
    sigma2: float
    events: tuple[SignalEvent, ...]
    seed: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if not self.sampling_rate > 0.0:
            raise ValueError("sampling_rate must be positive")
        if self.window_N < 1:
            raise ValueError("window_N must be >= 1")
        if not self.sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def snapshot_count(self) -> int:
        return round(self.horizon * self.sampling_rate)

    def snapshot_times(self) -> tuple[float, ...]:
        # snapshot k lands at k / rate so the window (t - span, t] holds
        # exactly window_N snapshots once k >= window_N
        rate = self.sampling_rate
        return tuple(k / rate for k in range(1, self.snapshot_count + 1))

    def active_events(self, t: float) -> tuple[SignalEvent, ...]:
        return tuple(ev for ev in self.events if ev.active(t))


@dataclass(frozen=True)
class TraceRecord:
    time: float
    r: int
    rhat_mm: int
    rhat_kn: int
    sigma2_hat: float
    err_r: float
    err_rhat_mm: float
    err_rhat_kn: float
    window_full: bool


@dataclass(frozen=True)
class TrackingTrace:
    """Per-snapshot tracking results for one scenario run."""

    scenario: Scenario
    records: tuple[TraceRecord, ...]

    def mean_rank_errors(self) -> tuple[float, float]:
        """Time-averaged |r - rhat| for both estimators.

        Averaged over steps with a full window: before the window fills
        no estimate exists (rhat is carried as 0), and counting those
        steps would measure the fill period rather than tracking.
        """
        full = [rec for rec in self.records if rec.window_full]
        if not full:
            raise ValueError("trace has no full-window steps")
        mm = sum(abs(rec.r - rec.rhat_mm) for rec in full) / len(full)
        kn = sum(abs(rec.r - rec.rhat_kn) for rec in full) / len(full)
        return mm, kn


def steering_vector(omega: float, n: int) -> np.ndarray:
    """Array response (1, e^{j*omega}, ..., e^{j*(n-1)*omega}), norm sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(1j * omega * np.arange(n))


def signal_covariance(scenario: Scenario, t: float) -> np.ndarray:
    """Population signal covariance A C_S A* at time t (noise excluded)."""
    cov = np.zeros((scenario.n, scenario.n), dtype=complex)
    for ev in scenario.active_events(t):
        a = steering_vector(ev.omega(t), scenario.n)
        cov += ev.power * np.outer(a, a.conj())
    return cov


def true_subspace(scenario: Scenario, t: float) -> tuple[int, np.ndarray]:
    """Active-signal count and an orthonormal basis for their span.

    The basis columns are the principal eigenvectors of the analytic
    signal covariance; every active event counts toward r regardless of
    whether its spike clears the detectability boundary.
    """
    active = scenario.active_events(t)
    r = len(active)
    if r == 0:
        return 0, np.zeros((scenario.n, 0), dtype=complex)
    eig = hermitian_eig(signal_covariance(scenario, t))
    return r, eig.eigenvectors[:, :r]


def generate_snapshot(
    scenario: Scenario, t: float, rng: np.random.Generator
) -> Snapshot:
    """One array snapshot at time t: active sources plus circular noise."""
    if not 0.0 <= t <= scenario.horizon:
        raise ValueError("t outside scenario horizon")
    n = scenario.n
    x = np.zeros(n, dtype=complex)
    for ev in scenario.active_events(t):
        s = ev.amplitude * _circular_gaussian(rng, 1)[0]
        x += s * steering_vector(ev.omega(t), n)
    x += math.sqrt(scenario.sigma2) * _circular_gaussian(rng, n)
    return Snapshot(
        time_index=round(t * scenario.sampling_rate), values=x, beta=2
    )


def _circular_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    # unit per-component variance, split evenly over re/im
    scale = 1.0 / math.sqrt(2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def subspace_error(basis: np.ndarray, estimate: np.ndarray) -> float:
    """Squared Frobenius projector distance ||WW* - VV*||_F^2.

    Expanded as r + k - 2*||W*V||_F^2 for orthonormal W (n x r) and
    V (n x k); clipped at zero against roundoff.
    """
    r = basis.shape[1]
    k = estimate.shape[1]
    cross = np.linalg.norm(basis.conj().T @ estimate) ** 2
    return max(0.0, r + k - 2.0 * cross)


def run_tracking(
    scenario: Scenario,
    costs: CostSchedule | None = None,
    kn_false_alarm: float = 0.005,
) -> TrackingTrace:
    """Stream the scenario through both rank estimators.

    Equal unit costs by default.  Until the window fills, estimates are
    suppressed: rhat is carried as 0, sigma2_hat is NaN, and both error
    columns fall back to the empty-estimate value r.
    """
    tracker = RankTracker(
        n=scenario.n,
        N=scenario.window_N,
        beta=2,
        schedule=costs,
        kn_false_alarm=kn_false_alarm,
    )
    rng = np.random.default_rng(scenario.seed)
    records = []
    for t in scenario.snapshot_times():
        snap = generate_snapshot(scenario, t, rng)
        step = tracker.step(snap)
        r, basis = true_subspace(scenario, t)
        if step.estimate is None:
            records.append(
                TraceRecord(
                    time=t,
                    r=r,
                    rhat_mm=0,
                    rhat_kn=0,
                    sigma2_hat=math.nan,
                    err_r=float(r),
                    err_rhat_mm=float(r),
                    err_rhat_kn=float(r),
                    window_full=False,
                )
            )
            continue
        vectors = step.eigensystem.eigenvectors
        rhat_mm = step.estimate.r_hat
        rhat_kn = step.kn_estimate.r_hat
        records.append(
            TraceRecord(
                time=t,
                r=r,
                rhat_mm=rhat_mm,
                rhat_kn=rhat_kn,
                sigma2_hat=step.sigma2,
                err_r=subspace_error(basis, vectors[:, : min(r, scenario.n)]),
                err_rhat_mm=subspace_error(basis, vectors[:, :rhat_mm]),
                err_rhat_kn=subspace_error(basis, vectors[:, :rhat_kn]),
                window_full=True,
            )
        )
    return TrackingTrace(scenario=scenario, records=tuple(records))


@dataclass(frozen=True)
class SweepRow:
    rate: float
    mm_mean: float
    mm_sd: float
    kn_mean: float
    kn_sd: float


def rescale_scenario(scenario: Scenario, rate: float) -> Scenario:
    """Change the sampling rate, keeping the window's time span fixed.

    Raising the rate therefore grows window_N and shrinks the aspect
    ratio n/window_N, which is what the sweep is probing.
    """
    if not rate > 0.0:
        raise ValueError("rate must be positive")
    span = scenario.window_N / scenario.sampling_rate
    window_N = max(1, round(span * rate))
    return replace(scenario, sampling_rate=rate, window_N=window_N)


def sweep_sampling_rate(
    scenario: Scenario,
    rates: tuple[float, ...],
    replicates: int,
    costs: CostSchedule | None = None,
    kn_false_alarm: float = 0.005,
) -> tuple[SweepRow, ...]:
    """Mean and sd of the time-averaged rank error at each sampling rate.

    Each (rate, replicate) pair runs on its own derived seed so the
    whole table is reproducible from the scenario seed alone.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if not rates:
        raise ValueError("rates must be nonempty")
    rows = []
    for idx, rate in enumerate(rates):
        scaled = rescale_scenario(scenario, rate)
        mm_errs, kn_errs = [], []
        for rep in range(replicates):
            run = replace(scaled, seed=scenario.seed + 1000 * idx + rep)
            mm, kn = run_tracking(run, costs, kn_false_alarm).mean_rank_errors()
            mm_errs.append(mm)
            kn_errs.append(kn)
        rows.append(
            SweepRow(
                rate=rate,
                mm_mean=statistics.fmean(mm_errs),
                mm_sd=statistics.stdev(mm_errs) if replicates > 1 else 0.0,
                kn_mean=statistics.fmean(kn_errs),
                kn_sd=statistics.stdev(kn_errs) if replicates > 1 else 0.0,
            )
        )
    return tuple(rows)


# -- scenario files ----------------------------------------------------------

_SCENARIO_KEYS = {"n", "horizon", "sampling_rate", "window", "sigma2", "seed"}
_SIGNAL_KEYS = {"t_on", "t_off", "snr_db", "omega_path"}


def read_scenario(path) -> Scenario:
    """Parse a scenario file: one [scenario] section, then [signal] blocks.

    Signal strength is given as snr_db = 10*log10(|C_0|^2 / sigma2); the
    direction path is a comma-separated list of t:omega breakpoints.
    """
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.readlines()

    scenario_kv: dict[str, str] | None = None
    signal_kvs: list[dict[str, str]] = []
    current: dict[str, str] | None = None
    allowed: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line == "[scenario]":
                if scenario_kv is not None:
                    raise ScenarioFormatError(
                        f"line {lineno}: duplicate [scenario] section"
                    )
                scenario_kv = {}
                current, allowed = scenario_kv, _SCENARIO_KEYS
            elif line == "[signal]":
                signal_kvs.append({})
                current, allowed = signal_kvs[-1], _SIGNAL_KEYS
            else:
                raise ScenarioFormatError(f"line {lineno}: unknown section {line}")
            continue
        if current is None:
            raise ScenarioFormatError(f"line {lineno}: key outside any section")
        key, sep, value = line.partition("=")
        if not sep:
            raise ScenarioFormatError(f"line {lineno}: expected key = value")
        key = key.strip()
        if key not in allowed:
            raise ScenarioFormatError(f"line {lineno}: unknown key {key!r}")
        if key in current:
            raise ScenarioFormatError(f"line {lineno}: duplicate key {key!r}")
        current[key] = value.strip()

    if scenario_kv is None:
        raise ScenarioFormatError("missing [scenario] section")
    missing = _SCENARIO_KEYS - scenario_kv.keys()
    if missing:
        raise ScenarioFormatError(
            f"[scenario] missing keys: {', '.join(sorted(missing))}"
        )
    try:
        sigma2 = float(scenario_kv["sigma2"])
        events = tuple(
            _parse_signal(kv, sigma2, i) for i, kv in enumerate(signal_kvs, 1)
        )
        return Scenario(
            n=int(scenario_kv["n"]),
            horizon=float(scenario_kv["horizon"]),
            sampling_rate=float(scenario_kv["sampling_rate"]),
            window_N=int(scenario_kv["window"]),
            sigma2=sigma2,
            events=events,
            seed=int(scenario_kv["seed"]),
        )
    except ScenarioFormatError:
        raise
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from exc


def _parse_signal(kv: dict[str, str], sigma2: float, index: int) -> SignalEvent:
    missing = _SIGNAL_KEYS - kv.keys()
    if missing:
        raise ScenarioFormatError(
            f"[signal] #{index} missing keys: {', '.join(sorted(missing))}"
        )
    breakpoints = []
    for part in kv["omega_path"].split(","):
        t_str, sep, w_str = part.partition(":")
        if not sep:
            raise ScenarioFormatError(
                f"[signal] #{index}: omega_path entries must be t:omega"
            )
        breakpoints.append((float(t_str), float(w_str)))
    amplitude = math.sqrt(sigma2 * 10.0 ** (float(kv["snr_db"]) / 10.0))
    try:
        return SignalEvent(
            t_on=float(kv["t_on"]),
            t_off=float(kv["t_off"]),
            omega_breakpoints=tuple(breakpoints),
            amplitude=amplitude,
        )
    except ValueError as exc:
        raise ScenarioFormatError(f"[signal] #{index}: {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, bool):
        raise TypeError("bool is not a CSV value here")
    if isinstance(value, int):
        return str(value)
    return format(value, ".10g")


def write_trace_csv(trace: TrackingTrace, handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in trace.records:
        writer.writerow(
            [
                _fmt(rec.time),
                _fmt(rec.r),
                _fmt(rec.rhat_mm),
                _fmt(rec.rhat_kn),
                _fmt(rec.sigma2_hat),
                _fmt(rec.err_r),
                _fmt(rec.err_rhat_mm),
                _fmt(rec.err_rhat_kn),
            ]
        )


def write_sweep_csv(rows: tuple[SweepRow, ...], handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                _fmt(row.rate),
                _fmt(row.mm_mean),
                _fmt(row.mm_sd),
                _fmt(row.kn_mean),
                _fmt(row.kn_sd),
            ]
        )
