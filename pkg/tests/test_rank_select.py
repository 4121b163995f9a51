"""Sequential selector, cost schedules, and tracker behavior."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankest.linalg_cov import (
    EigenSystem,
    Snapshot,
    SnapshotWindow,
    hermitian_eig,
    push_snapshot,
    sample_covariance,
)
from rankest.minimax_threshold import ThresholdProblem, solve_minimax_threshold
from rankest.rank_select import (
    CostSchedule,
    RankTracker,
    ThresholdSequence,
    build_threshold_sequence,
    cumulative_exclusion_costs,
    default_lambda0,
    estimate_noise_variance,
    estimate_rank,
    kn_estimate_rank,
)
from rankest.rmt_model import NoiseModel, null_standardization
from rankest.tracy_widom import tw_quantile, tw_table

# frozen 2026-08-22 from per-index re-solves at n=9, N=45, beta=2,
# sigma2=1, equal unit costs, lambda0 = sqrt(0.2) + 45^(-1/3)
FROZEN_T = (
    1.845873189,
    1.852667495,
    1.860354635,
    1.869207883,
    1.879649783,
    1.892386023,
    1.908734532,
    1.931639667,
    1.970428629,
)


def eig_of(values):
    vals = np.asarray(values, dtype=float)
    return EigenSystem(eigenvalues=vals, eigenvectors=np.eye(len(vals)))


def seq_of(thresholds, n=None):
    n = n if n is not None else len(thresholds)
    m = NoiseModel(n=n, N=5 * n, sigma2=1.0, beta=2)
    return ThresholdSequence(
        T=tuple(float(t) for t in thresholds),
        noise=m,
        lambda0=default_lambda0(m),
        schedule=CostSchedule.equal_unit(n),
    )


def test_cost_schedule_validation():
    with pytest.raises(ValueError):
        CostSchedule(c_I=0.0, c_E=(1.0,))
    with pytest.raises(ValueError):
        CostSchedule(c_I=1.0, c_E=(1.0, -0.5))
    with pytest.raises(ValueError):
        CostSchedule(c_I=1.0, c_E=(0.0, 0.0))
    with pytest.raises(ValueError):
        CostSchedule.capped(5, 0)
    with pytest.raises(ValueError):
        CostSchedule.capped(5, 6)


def test_cumulative_costs_constant_schedule():
    sched = CostSchedule(c_I=1.0, c_E=(0.5,) * 6)
    assert cumulative_exclusion_costs(sched) == tuple(
        0.5 * (6 - j) for j in range(6)
    )


def test_cumulative_costs_hand_example():
    sched = CostSchedule(c_I=1.0, c_E=(3.0, 2.0, 1.0))
    assert cumulative_exclusion_costs(sched) == (6.0, 3.0, 1.0)


def test_cumulative_costs_capped_schedule():
    sched = CostSchedule.capped(7, 3)
    suffix = cumulative_exclusion_costs(sched)
    assert suffix == (3.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    assert all(a >= b for a, b in zip(suffix, suffix[1:]))


def test_threshold_sequence_matches_fresh_solves():
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)
    lam0 = default_lambda0(m)
    seq = build_threshold_sequence(m, lam0, CostSchedule.equal_unit(9))
    for T_i, frozen, suffix in zip(
        seq.T, FROZEN_T, cumulative_exclusion_costs(CostSchedule.equal_unit(9))
    ):
        fresh = solve_minimax_threshold(
            ThresholdProblem(noise=m, lambda0=lam0, c_I=1.0, c_E=suffix)
        ).T
        assert T_i == pytest.approx(fresh, abs=1e-12)
        assert T_i == pytest.approx(frozen, abs=1e-6)
    assert all(a < b for a, b in zip(seq.T, seq.T[1:]))


def test_threshold_sequence_sentinels_past_cap():
    m = NoiseModel(n=6, N=30, sigma2=1.0, beta=2)
    seq = build_threshold_sequence(m, default_lambda0(m), CostSchedule.capped(6, 2))
    assert all(math.isfinite(T) for T in seq.T[:2])
    assert all(T == math.inf for T in seq.T[2:])


def test_threshold_sequence_length_mismatch():
    m = NoiseModel(n=4, N=20, sigma2=1.0, beta=2)
    with pytest.raises(ValueError):
        build_threshold_sequence(m, default_lambda0(m), CostSchedule.equal_unit(3))


def test_estimate_rank_all_below():
    est = estimate_rank(eig_of([0.5, 0.4, 0.3]), seq_of([1.0, 1.0, 1.0]))
    assert est.r_hat == 0
    assert est.decisions == (False, False, False)


def test_estimate_rank_sequential_stop():
    # index 2 fails, index 3 exceeds; the scan must not see index 3
    seq = seq_of([1.0, 2.0, 3.0])
    est = estimate_rank(eig_of([10.0, 1.0, 6.0]), seq)
    assert est.r_hat == 1
    assert est.decisions == (True, False, True)
    assert est.eigenvalues == (10.0, 1.0, 6.0)


def test_estimate_rank_full_sweep():
    est = estimate_rank(eig_of([4.0, 3.0, 2.0]), seq_of([1.0, 1.0, 1.0]))
    assert est.r_hat == 3


def test_estimate_rank_short_thresholds():
    with pytest.raises(ValueError):
        estimate_rank(eig_of([1.0, 1.0, 1.0]), seq_of([2.0, 2.0], n=2))


def test_estimate_rank_deterministic():
    eig = eig_of([3.0, 1.5, 0.2])
    seq = seq_of([1.0, 1.0, 1.0])
    assert estimate_rank(eig, seq) == estimate_rank(eig, seq)


@given(
    st.lists(st.floats(min_value=0.01, max_value=50.0), min_size=1, max_size=8),
    st.floats(min_value=1.0001, max_value=10.0),
)
@settings(max_examples=60, deadline=None)
def test_scaling_up_never_decreases_rank(values, alpha):
    values = sorted(values, reverse=True)
    seq = seq_of([1.0] * len(values))
    base = estimate_rank(eig_of(values), seq).r_hat
    scaled = estimate_rank(eig_of([alpha * v for v in values]), seq).r_hat
    assert scaled >= base


@given(
    st.lists(st.floats(min_value=0.01, max_value=50.0), min_size=1, max_size=8),
    st.integers(min_value=0, max_value=7),
    st.floats(min_value=0.0, max_value=30.0),
)
@settings(max_examples=60, deadline=None)
def test_raising_threshold_never_increases_rank(values, idx, bump):
    values = sorted(values, reverse=True)
    n = len(values)
    idx = idx % n
    base_t = [1.0] * n
    raised = list(base_t)
    raised[idx] += bump
    base = estimate_rank(eig_of(values), seq_of(base_t)).r_hat
    after = estimate_rank(eig_of(values), seq_of(raised)).r_hat
    assert after <= base


@given(st.lists(st.floats(min_value=0.1, max_value=1e6), min_size=4, max_size=9))
@settings(max_examples=50, deadline=None)
def test_capped_schedule_caps_estimate(values):
    values = sorted(values, reverse=True)
    n = len(values)
    m = NoiseModel(n=n, N=5 * n, sigma2=1.0, beta=2)
    seq = build_threshold_sequence(m, default_lambda0(m), CostSchedule.capped(n, 2))
    assert estimate_rank(eig_of(values), seq).r_hat <= 2


def test_cumulative_costs_equal_naive_double_loop():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(1, 10))
        costs = tuple(float(c) for c in rng.uniform(0.0, 3.0, size=n))
        if not any(c > 0.0 for c in costs):
            continue
        sched = CostSchedule(c_I=1.0, c_E=costs)
        naive = tuple(sum(costs[j:]) for j in range(n))
        got = cumulative_exclusion_costs(sched)
        assert all(abs(a - b) < 1e-12 for a, b in zip(got, naive))


def test_noise_variance_trivial_cases():
    assert estimate_noise_variance(eig_of([2.0, 4.0, 6.0]), 0) == pytest.approx(4.0)
    assert estimate_noise_variance(eig_of([5.0, 1.0, 1.0, 1.0]), 1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        estimate_noise_variance(eig_of([1.0, 1.0]), 2)
    with pytest.raises(ValueError):
        estimate_noise_variance(eig_of([1.0, 1.0]), -1)


def test_noise_variance_white_noise_monte_carlo():
    rng = np.random.default_rng(101)
    n, N, reps = 9, 45, 1000
    estimates = []
    for _ in range(reps):
        x = (rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))) / np.sqrt(2.0)
        w = SnapshotWindow(capacity=N, dimension=n, beta=2)
        for t in range(N):
            push_snapshot(w, Snapshot(time_index=t, values=x[t], beta=2))
        eig = hermitian_eig(sample_covariance(w))
        estimates.append(estimate_noise_variance(eig, 0))
    assert abs(float(np.mean(estimates)) - 1.0) <= 0.15


def test_kn_threshold_form():
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)
    mu, sd = null_standardization(m)
    T = mu + sd * tw_quantile(tw_table(2), 0.995)
    est = kn_estimate_rank(eig_of([T + 0.01] + [0.5] * 8), m, 0.005)
    assert est.r_hat == 1
    est = kn_estimate_rank(eig_of([T - 0.01] + [0.5] * 8), m, 0.005)
    assert est.r_hat == 0


def test_kn_vanishing_false_alarm_silences_detector():
    # the threshold grows without bound as the false-alarm budget shrinks,
    # so any fixed spike is eventually ignored
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)
    spike = eig_of([2.6] + [1.0] * 8)
    assert kn_estimate_rank(spike, m, 0.005).r_hat == 1
    assert kn_estimate_rank(spike, m, 1e-12).r_hat == 0
    mu, sd = null_standardization(m)
    q = [tw_quantile(tw_table(2), 1.0 - p) for p in (0.05, 1e-3, 1e-6, 1e-12)]
    assert all(a < b for a, b in zip(q, q[1:]))


def test_kn_false_alarm_domain():
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)
    for p in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            kn_estimate_rank(eig_of([1.0] * 9), m, p)


def test_default_lambda0():
    m = NoiseModel(n=9, N=45, sigma2=2.0, beta=2)
    expected = (math.sqrt(0.2) + 45.0 ** (-1.0 / 3.0)) * 2.0
    assert default_lambda0(m) == pytest.approx(expected, rel=1e-14)


def tracker_inputs(rng, n, N, steps, scale=1.0):
    out = []
    for t in range(steps):
        x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        out.append(Snapshot(time_index=t, values=scale * x, beta=2))
    return out


def test_tracker_warmup_then_estimates():
    rng = np.random.default_rng(5)
    n, N = 4, 12
    tracker = RankTracker(n=n, N=N, beta=2)
    snaps = tracker_inputs(rng, n, N, N + 3)
    for k, s in enumerate(snaps):
        step = tracker.step(s)
        if k < N - 1:
            assert step.estimate is None
            assert step.kn_estimate is None
            assert step.sigma2 is None
            assert step.eigensystem is None
        else:
            assert step.estimate is not None
            assert 0 <= step.estimate.r_hat <= n
            assert step.sigma2 > 0.0


def test_tracker_first_window_variance_is_full_spectrum_mean():
    rng = np.random.default_rng(6)
    n, N = 3, 8
    snaps = tracker_inputs(rng, n, N, N)
    tracker = RankTracker(n=n, N=N, beta=2)
    for s in snaps[:-1]:
        tracker.step(s)
    # recompute the first full window's spectrum independently
    w = SnapshotWindow(capacity=N, dimension=n, beta=2)
    for s in snaps:
        push_snapshot(w, s)
    eig = hermitian_eig(sample_covariance(w))
    expected = float(np.mean(eig.eigenvalues))
    step = tracker.step(snaps[-1])
    assert step.sigma2 == pytest.approx(expected, rel=1e-12)


def test_tracker_exactly_homogeneous_in_scale():
    # with the default lambda0 the decision sequence is invariant to a
    # global amplitude rescale of the data
    n, N, steps = 4, 12, 40
    base = tracker_inputs(np.random.default_rng(7), n, N, steps)
    scaled = [
        Snapshot(time_index=s.time_index, values=3.0 * s.values, beta=2)
        for s in base
    ]
    t1 = RankTracker(n=n, N=N, beta=2)
    t2 = RankTracker(n=n, N=N, beta=2)
    for a, b in zip(base, scaled):
        s1, s2 = t1.step(a), t2.step(b)
        if s1.estimate is not None:
            assert s1.estimate.r_hat == s2.estimate.r_hat
            assert s1.estimate.decisions == s2.estimate.decisions
            assert s1.kn_estimate.r_hat == s2.kn_estimate.r_hat
            assert s2.sigma2 == pytest.approx(9.0 * s1.sigma2, rel=1e-12)


def test_tracker_fixed_lambda0_resolves_on_variance_drift(monkeypatch):
    import rankest.rank_select as mod

    calls = []
    original = mod.build_threshold_sequence

    def counting(noise, lam0, schedule):
        calls.append(noise.sigma2)
        return original(noise, lam0, schedule)

    monkeypatch.setattr(mod, "build_threshold_sequence", counting)
    n, N = 3, 6
    tracker = RankTracker(n=n, N=N, beta=2, lambda0=2.0)
    assert calls == []  # no unit-scale pre-solve on the fixed path

    # period-N data: after fill, every window holds the same multiset of
    # vectors, the covariance is constant, and one solve suffices
    rng = np.random.default_rng(21)
    cycle = [
        (rng.standard_normal(n) + 1j * rng.standard_normal(n)) for _ in range(N)
    ]
    for t in range(3 * N):
        tracker.step(Snapshot(time_index=t, values=cycle[t % N], beta=2))
    assert len(calls) == 1

    # a 10x amplitude jump forces a re-solve once it enters the window
    for t in range(3 * N, 5 * N):
        tracker.step(
            Snapshot(time_index=t, values=10.0 * cycle[t % N], beta=2)
        )
    assert len(calls) >= 2


def test_tracker_rejects_bad_schedule_length():
    with pytest.raises(ValueError):
        RankTracker(n=4, N=12, beta=2, schedule=CostSchedule.equal_unit(3))


def test_tracker_survives_rank_deficient_window():
    # constant snapshots make the covariance exactly rank one; the
    # residual-mean variance estimate rounds to <= 0 and must be floored,
    # not propagated into the noise model
    n, N = 3, 6
    tracker = RankTracker(n=n, N=N, beta=2)
    vals = np.array([1.0 + 0j, 0.5, 0.25])
    last = None
    for t in range(3 * N):
        last = tracker.step(Snapshot(time_index=t, values=vals, beta=2))
    assert last.estimate is not None
    assert last.sigma2 > 0.0
    assert last.estimate.r_hat == 1  # the single direction reads as signal


def test_tracker_deterministic():
    n, N, steps = 3, 9, 25
    snaps = tracker_inputs(np.random.default_rng(8), n, N, steps)
    r1 = [RankTracker(n=n, N=N, beta=2).step(s) for s in snaps]
    r2 = [RankTracker(n=n, N=N, beta=2).step(s) for s in snaps]
    for a, b in zip(r1, r2):
        if a.estimate is None:
            assert b.estimate is None
        else:
            assert a.estimate == b.estimate
            assert a.kn_estimate == b.kn_estimate
            assert a.sigma2 == b.sigma2
