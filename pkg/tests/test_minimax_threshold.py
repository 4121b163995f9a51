"""Threshold equation and margin-formula checks."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

from rankest.minimax_threshold import (
    ThresholdProblem,
    ThresholdSolution,
    boundary_expansion,
    critical_margin_threshold,
    small_margin_threshold,
    solve_minimax_threshold,
)
from rankest.rmt_model import (
    NoiseModel,
    null_standardization,
    spiked_standardization,
)
from rankest.specfun import std_normal_quantile
from rankest.tracy_widom import tw_cdf, tw_pdf, tw_quantile, tw_table


def unit_model(gamma, N, beta=2):
    n = max(1, int(round(gamma * N)))
    return NoiseModel(n=n, N=N, sigma2=1.0, beta=beta, gamma=gamma)


def risk_pair(problem, T):
    table = tw_table(problem.noise.beta)
    mu0, sd0 = null_standardization(problem.noise)
    mu1, sd1 = spiked_standardization(problem.noise, problem.lambda0)
    null_risk = problem.c_I * (1.0 - tw_cdf(table, (np.asarray(T) - mu0) / sd0))
    miss_risk = problem.c_E * ndtr((np.asarray(T) - mu1) / sd1)
    return null_risk, miss_risk


def brute_force_threshold(problem, levels=4, points=4001):
    # nested grid minimization of the max risk; final step < 1e-12
    mu0, sd0 = null_standardization(problem.noise)
    mu1, sd1 = spiked_standardization(problem.noise, problem.lambda0)
    lo, hi = mu0 - 10.0 * sd0, mu1 + 10.0 * sd1
    for _ in range(levels):
        grid = np.linspace(lo, hi, points)
        null_risk, miss_risk = risk_pair(problem, grid)
        k = int(np.argmin(np.maximum(null_risk, miss_risk)))
        lo, hi = grid[max(0, k - 2)], grid[min(points - 1, k + 2)]
    return 0.5 * (lo + hi)


def test_problem_validation():
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)
    with pytest.raises(ValueError):
        ThresholdProblem(noise=m, lambda0=0.2, c_I=1.0, c_E=1.0)
    with pytest.raises(ValueError):
        ThresholdProblem(noise=m, lambda0=1.0, c_I=0.0, c_E=1.0)
    with pytest.raises(ValueError):
        ThresholdProblem(noise=m, lambda0=1.0, c_I=1.0, c_E=-1.0)


def test_solution_against_frozen_grid_oracle():
    # frozen 2026-08-22 from the nested-grid oracle above at step < 1e-12
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)
    lam0 = math.sqrt(0.2) + 45.0 ** (-1.0 / 3.0)
    prob = ThresholdProblem(noise=m, lambda0=lam0, c_I=1.0, c_E=1.0)
    sol = solve_minimax_threshold(prob)
    assert abs(sol.T - 1.970428629300) <= 1e-6
    assert abs(brute_force_threshold(prob) - sol.T) <= 1e-9


def test_residual_bound_holds():
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)
    for ce in (0.1, 1.0, 10.0):
        prob = ThresholdProblem(noise=m, lambda0=1.0, c_I=1.0, c_E=ce)
        sol = solve_minimax_threshold(prob)
        assert sol.residual <= 1e-10 * (prob.c_I + prob.c_E)
        null_risk, miss_risk = risk_pair(prob, sol.T)
        assert abs(float(null_risk) - float(miss_risk)) <= 1e-10 * (1.0 + ce)
        assert sol.max_risk == pytest.approx(float(null_risk), rel=1e-6)


def test_threshold_monotone_in_costs():
    m = NoiseModel(n=9, N=45, sigma2=1.0, beta=2)

    def T_at(ci, ce):
        return solve_minimax_threshold(
            ThresholdProblem(noise=m, lambda0=1.0, c_I=ci, c_E=ce)
        ).T

    rising_ce = [T_at(1.0, ce) for ce in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(rising_ce, rising_ce[1:]))
    rising_ci = [T_at(ci, 1.0) for ci in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(a < b for a, b in zip(rising_ci, rising_ci[1:]))


def test_standardized_coordinate_consistent():
    m = NoiseModel(n=20, N=100, sigma2=2.0, beta=1)
    prob = ThresholdProblem(noise=m, lambda0=2.5, c_I=1.0, c_E=3.0)
    sol = solve_minimax_threshold(prob)
    mu0, sd0 = null_standardization(m)
    assert sol.t == pytest.approx((sol.T - mu0) / sd0, rel=1e-12)


def random_problem(rng):
    gamma = float(rng.uniform(0.05, 1.0))
    N = int(rng.integers(30, 400))
    beta = int(rng.choice([1, 2]))
    m = unit_model(gamma, N, beta)
    lam0 = math.sqrt(gamma) * float(rng.uniform(1.1, 4.0))
    ci = float(10.0 ** rng.uniform(-2, 2))
    ce = float(10.0 ** rng.uniform(-2, 2))
    return ThresholdProblem(noise=m, lambda0=lam0, c_I=ci, c_E=ce)


def test_risk_gap_changes_sign_exactly_once():
    rng = np.random.default_rng(314)
    for _ in range(50):
        prob = random_problem(rng)
        mu0, sd0 = null_standardization(prob.noise)
        mu1, sd1 = spiked_standardization(prob.noise, prob.lambda0)
        grid = np.linspace(mu0 - 10.0 * sd0, mu1 + 10.0 * sd1, 2000)
        null_risk, miss_risk = risk_pair(prob, grid)
        signs = np.sign(null_risk - miss_risk)
        # sign() may emit zeros exactly at the root; drop them
        signs = signs[signs != 0.0]
        assert int(np.sum(np.diff(signs) != 0.0)) == 1


def test_solution_is_local_minimax_point():
    rng = np.random.default_rng(99)
    for _ in range(10):
        prob = random_problem(rng)
        sol = solve_minimax_threshold(prob)
        here = max(risk_pair(prob, sol.T))
        for delta in (1e-4, 1e-3):
            for T in (sol.T - delta, sol.T + delta):
                null_risk, miss_risk = risk_pair(prob, T)
                assert max(null_risk, miss_risk) >= here - 1e-14


def test_small_margin_case_selection_matches_formulas():
    m = unit_model(1.0, 10**6)
    table = tw_table(2)
    mass = 1.0 - tw_cdf(table, 0.0)
    h = 1e-3
    scale = (h**3 * m.N / 2.0) ** (1.0 / 6.0)

    # inclusion-heavy side: normal-quantile formula
    t1 = small_margin_threshold(h, m, 1.0, 2.0)
    expected = 2.0 / math.sqrt(2.0) * scale * std_normal_quantile(mass / 2.0)
    assert t1 == pytest.approx(expected, rel=1e-12)

    # exclusion-light side: quantile-of-F leading term plus correction
    t2 = small_margin_threshold(h, m, 1.0, 0.01)
    t_edge = tw_quantile(table, 0.99)
    corr = (
        (1.0 / tw_pdf(table, t_edge))
        * 0.01
        * math.sqrt(1.0 / math.pi)
        * scale
        / t_edge
        * math.exp(-2.0 * t_edge**2 / (8.0 * scale * scale))
    )
    assert t2 == pytest.approx(t_edge + corr, rel=1e-12)

    # balanced: returned value solves t^2 = K exp(-decay t^2)
    t3 = small_margin_threshold(h, m, 1.0, mass)
    K = (1.0 / tw_pdf(table, 0.0)) * mass * math.sqrt(1.0 / math.pi) * scale
    decay = 2.0 / (8.0 * scale * scale)
    assert abs(t3 * t3 - K * math.exp(-decay * t3 * t3)) < 1e-8


def test_small_margin_exclusion_light_limit():
    # t -> F^-1(1 - c_E/c_I) as the margin shrinks
    m = unit_model(1.0, 10**6)
    t_edge = tw_quantile(tw_table(2), 0.99)
    gaps = [
        abs(small_margin_threshold(h, m, 1.0, 0.01) - t_edge)
        for h in (1e-2, 1e-3, 1e-4)
    ]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-4


def solver_t(gamma, N, lam0, ci, ce, beta=2):
    m = unit_model(gamma, N, beta)
    prob = ThresholdProblem(noise=m, lambda0=lam0, c_I=ci, c_E=ce)
    return solve_minimax_threshold(prob).t


def test_small_margin_tracks_solver_exclusion_light():
    # h = N^{-1/2}, cost ratio 0.01; agreement tightens as N grows
    rels = []
    for N in (10**4, 10**5, 10**6):
        h = N**-0.5
        t_form = small_margin_threshold(h, unit_model(1.0, N), 1.0, 0.01)
        t_exact = solver_t(1.0, N, 1.0 + h, 1.0, 0.01)
        rels.append(abs(t_form - t_exact) / abs(t_exact))
    assert rels[0] > rels[1] > rels[2]
    assert rels[2] <= 0.10


def test_small_margin_tracks_solver_inclusion_heavy_after_unit_fix():
    # the scale-proportional branches inherit the looser grid-edge sd
    # convention; dividing by (1 + sqrt(gamma))^(2/3) restores agreement
    unit_fix = 2.0 ** (2.0 / 3.0)  # gamma = 1
    for N in (10**4, 10**5, 10**6):
        h = N**-0.5
        t_form = small_margin_threshold(h, unit_model(1.0, N), 1.0, 2.0) / unit_fix
        t_exact = solver_t(1.0, N, 1.0 + h, 1.0, 2.0)
        assert abs(t_form - t_exact) / abs(t_exact) <= 0.10


def test_small_margin_validation():
    m = unit_model(1.0, 1000)
    with pytest.raises(ValueError):
        small_margin_threshold(0.0, m, 1.0, 1.0)
    with pytest.raises(ValueError):
        small_margin_threshold(1e-3, m, -1.0, 1.0)
    scaled = NoiseModel(n=1000, N=1000, sigma2=2.0, beta=2, gamma=1.0)
    with pytest.raises(ValueError):
        small_margin_threshold(1e-3, scaled, 1.0, 1.0)


def test_critical_margin_tracks_solver_at_equal_costs():
    rels = []
    for N in (10**4, 10**5, 10**6):
        res = critical_margin_threshold(1.0, unit_model(1.0, N), 1.0, 1.0)
        lam0 = 1.0 + N ** (-1.0 / 3.0)
        t_exact = solver_t(1.0, N, lam0, 1.0, 1.0)
        rels.append(abs(res.t - t_exact) / abs(t_exact))
    assert rels[0] > rels[1] > rels[2]
    assert rels[2] <= 0.15


def test_critical_margin_exclusion_dominant_behavior():
    m = unit_model(1.0, 10**6)
    ts, ratios = [], []
    for k in (2, 4, 6, 8):
        res = critical_margin_threshold(1.0, m, 1.0, 10.0**k)
        assert res.t < 0.0
        assert math.isnan(res.inclusion_dominant_limit)
        ts.append(abs(res.t))
        ratios.append(res.t / res.exclusion_dominant_limit)
    assert all(a < b for a, b in zip(ts, ts[1:]))
    # approaches the sqrt-log limit from below
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert 0.75 < ratios[-1] < 1.0


def test_critical_margin_inclusion_dominant_behavior():
    # convergence to the power-of-log limit is logarithmic; the stated
    # limit is still 17% off at a cost ratio of 1e-12
    m = unit_model(1.0, 10**6)
    rels = []
    for k in (6, 9, 12):
        res = critical_margin_threshold(1.0, m, 1.0, 10.0**-k)
        assert res.t > 0.0
        assert math.isnan(res.exclusion_dominant_limit)
        expected = (0.75 * k * math.log(10.0)) ** (2.0 / 3.0)
        assert res.inclusion_dominant_limit == pytest.approx(expected, rel=1e-12)
        rels.append(abs(res.t - res.inclusion_dominant_limit) / res.inclusion_dominant_limit)
    assert rels[0] > rels[1] > rels[2]
    assert rels[2] <= 0.20


def test_critical_margin_validation():
    m = unit_model(1.0, 1000)
    with pytest.raises(ValueError):
        critical_margin_threshold(0.0, m, 1.0, 1.0)
    with pytest.raises(ValueError):
        critical_margin_threshold(1.0, m, 1.0, 0.0)
    scaled = NoiseModel(n=1000, N=1000, sigma2=0.5, beta=2, gamma=1.0)
    with pytest.raises(ValueError):
        critical_margin_threshold(1.0, scaled, 1.0, 1.0)


def test_boundary_expansion_mean_shift_cubic_error():
    m = unit_model(1.0, 45)
    edge = 4.0  # sigma2 (1 + sqrt(gamma))^2 at gamma = 1
    errs = []
    for h in (0.08, 0.04, 0.02):
        mu, _ = spiked_standardization(m, 1.0 + h)
        exp = boundary_expansion(h, m)
        assert exp.mean_shift == pytest.approx(h * h, rel=1e-12)
        errs.append(abs(mu - edge - exp.mean_shift))
    assert 6.0 < errs[0] / errs[1] < 10.0
    assert 6.0 < errs[1] / errs[2] < 10.0


def test_boundary_expansion_sd_converges():
    m = unit_model(0.25, 200)
    rels = []
    for h in (0.1, 0.03, 0.01, 0.003):
        _, sd_exact = spiked_standardization(m, math.sqrt(0.25) + h)
        rels.append(abs(boundary_expansion(h, m).sd - sd_exact) / sd_exact)
    assert all(a > b for a, b in zip(rels, rels[1:]))
    assert rels[-1] < 0.01


def test_boundary_expansion_degenerate_and_invalid():
    m = unit_model(1.0, 45)
    at_zero = boundary_expansion(0.0, m)
    assert at_zero.mean_shift == 0.0
    assert at_zero.sd == 0.0
    with pytest.raises(ValueError):
        at_zero.standardized_argument(1.0)
    with pytest.raises(ValueError):
        boundary_expansion(-0.01, m)
    scaled = NoiseModel(n=45, N=45, sigma2=3.0, beta=2, gamma=1.0)
    with pytest.raises(ValueError):
        boundary_expansion(0.01, scaled)


def test_boundary_expansion_argument_hand_value():
    m = unit_model(1.0, 1000)
    h = 0.01
    exp = boundary_expansion(h, m)
    cube = h**3 * m.N
    expected = (
        math.sqrt(2.0) * 0.5 * 1.7 * (2.0 / cube) ** (1.0 / 6.0)
        - math.sqrt(1.0) * math.sqrt(cube) / 2.0
    )
    assert exp.standardized_argument(1.7) == pytest.approx(expected, rel=1e-12)
