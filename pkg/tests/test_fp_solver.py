"""Solver-layer tests: surrogate, gradient, projection, subproblem, solve.

Grid-search and random-witness oracles were run before the implementations
were finalized; the tolerances below are frozen from those runs.
"""

import itertools
import math

import numpy as np
import pytest

from rcc_alloc.model import CoefficientBundle, sum_relaxed_rate
from rcc_alloc.scenario import ChannelSet, ScenarioConfig, generate_channels
from rcc_alloc.fp_solver import (
    AuxiliaryMatrix,
    Constraints,
    Infeasible,
    QDomainError,
    SolverSettings,
    find_feasible,
    max_radar_sinr,
    project,
    q_gradient,
    q_value,
    solve,
    solve_subproblem,
    update_y,
)


def random_bundle(rng, n, k, beta_scale=1.0):
    return CoefficientBundle(
        alpha=rng.uniform(0.5, 4.0, (n, k)),
        beta=rng.uniform(0.0, beta_scale, (n, k)),
        xi=rng.uniform(1.0, 5.0, n),
        gamma=rng.uniform(0.0, 0.5, n),
    )


def box_constraints(n, k, cap=1.0, comm_budget=None, radar_budget=None,
                    mu=0.0, xi=None, gamma=None):
    return Constraints(
        upper=np.full((k + 1, n), cap),
        comm_budget=comm_budget if comm_budget is not None else k * n * cap,
        radar_budget=radar_budget if radar_budget is not None else n * cap,
        xi=np.ones(n) if xi is None else xi,
        gamma=np.zeros(n) if gamma is None else gamma,
        mu=mu,
    )


# ---------------------------------------------------------------------------
# auxiliaries and surrogate value
# ---------------------------------------------------------------------------

def test_update_y_zero_power():
    coeffs = random_bundle(np.random.default_rng(0), 3, 2)
    aux = update_y(np.zeros((3, 3)), coeffs, 0.5)
    assert np.all(aux.y == 0.0)


def test_update_y_single_entry():
    # alpha=1, beta=0, w=4 -> y = sqrt(4)/1 = 2
    coeffs = CoefficientBundle(alpha=np.array([[1.0]]), beta=np.array([[0.0]]),
                               xi=np.ones(1), gamma=np.zeros(1))
    aux = update_y(np.array([[4.0], [0.0]]), coeffs, 0.5)
    assert aux.y[0, 0] == pytest.approx(2.0, abs=1e-15)


def test_tightness_random_points():
    """Q at the closed-form auxiliaries reproduces the true sum rate."""
    rng = np.random.default_rng(1)
    for _ in range(50):
        n, k = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        coeffs = random_bundle(rng, n, k)
        p = rng.uniform(0.0, 2.0, (k + 1, n))
        aux = update_y(p, coeffs, 0.5)
        gap = abs(q_value(p, aux, coeffs, 0.5) - sum_relaxed_rate(p, coeffs, 0.5))
        assert gap <= 1e-9


def test_q_zero_aux_is_zero():
    rng = np.random.default_rng(2)
    coeffs = random_bundle(rng, 4, 3)
    p = rng.uniform(0.0, 1.0, (4, 4))
    aux = AuxiliaryMatrix(np.zeros((4, 3)))
    assert q_value(p, aux, coeffs, 0.5) == 0.0


def test_q_zero_comm_closed_form():
    # y=0.3, beta=0.5, Pr=1: log2(1 - 0.09*1.5) = -0.20922796213800007
    coeffs = CoefficientBundle(alpha=np.array([[1.0]]), beta=np.array([[0.5]]),
                               xi=np.ones(1), gamma=np.zeros(1))
    p = np.array([[0.0], [1.0]])
    aux = AuxiliaryMatrix(np.array([[0.3]]))
    assert q_value(p, aux, coeffs, 0.5) == pytest.approx(-0.20922796213800007, rel=1e-13)


def test_q_domain_error_names_term():
    coeffs = CoefficientBundle(alpha=np.array([[1.0, 1.0]]),
                               beta=np.array([[0.5, 0.5]]),
                               xi=np.ones(1), gamma=np.zeros(1))
    p = np.array([[0.0], [0.0], [9.0]])  # radar 9 W
    aux = AuxiliaryMatrix(np.array([[2.0, 0.0]]))  # y^2(beta Pr + 1) >> 1 for user 0
    with pytest.raises(QDomainError) as err:
        q_value(p, aux, coeffs, 0.5)
    assert err.value.subcarrier == 0
    assert err.value.user == 0


def test_aux_matrix_rejects_negative():
    with pytest.raises(ValueError):
        AuxiliaryMatrix(np.array([[-0.1]]))


# ---------------------------------------------------------------------------
# gradient
# ---------------------------------------------------------------------------

def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        n, k = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        coeffs = random_bundle(rng, n, k, beta_scale=0.3)
        p = rng.uniform(0.2, 1.5, (k + 1, n))  # interior, away from sqrt kink
        # any y in (0, 2 y*(p)) keeps the surrogate argument positive
        aux = AuxiliaryMatrix(update_y(p, coeffs, 0.5).y * rng.uniform(0.3, 1.4))
        grad = q_gradient(p, aux, coeffs, 0.5)
        fd = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            dp = np.zeros_like(p)
            dp[idx] = h
            fd[idx] = (q_value(p + dp, aux, coeffs, 0.5)
                       - q_value(p - dp, aux, coeffs, 0.5)) / (2 * h)
        scale = np.maximum(np.abs(fd), 1e-6)
        worst = max(worst, float(np.max(np.abs(grad - fd) / scale)))
    assert worst < 1e-5


def test_gradient_radar_row_nonpositive():
    rng = np.random.default_rng(4)
    for _ in range(20):
        coeffs = random_bundle(rng, 4, 3)
        p = rng.uniform(0.0, 1.0, (4, 4))
        aux = AuxiliaryMatrix(update_y(p, coeffs, 0.5).y * rng.uniform(0.3, 1.4))
        grad = q_gradient(p, aux, coeffs, 0.5)
        assert np.all(grad[-1, :] <= 1e-15)


def test_gradient_zero_aux():
    coeffs = random_bundle(np.random.default_rng(5), 3, 2)
    p = np.random.default_rng(5).uniform(0.0, 1.0, (3, 3))
    aux = AuxiliaryMatrix(np.zeros((3, 2)))
    assert np.all(q_gradient(p, aux, coeffs, 0.5) == 0.0)


def test_q_concave_for_fixed_aux():
    """Midpoint value dominates the chord between feasible points."""
    rng = np.random.default_rng(6)
    for _ in range(50):
        n, k = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        coeffs = random_bundle(rng, n, k, beta_scale=0.3)
        aux = update_y(rng.uniform(0.1, 1.0, (k + 1, n)), coeffs, 0.5)
        p1 = rng.uniform(0.0, 1.0, (k + 1, n))
        p2 = rng.uniform(0.0, 1.0, (k + 1, n))
        try:
            q1 = q_value(p1, aux, coeffs, 0.5)
            q2 = q_value(p2, aux, coeffs, 0.5)
            qm = q_value(0.5 * (p1 + p2), aux, coeffs, 0.5)
        except QDomainError:
            continue
        assert qm >= 0.5 * (q1 + q2) - 1e-9


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def test_project_feasible_unchanged():
    rng = np.random.default_rng(7)
    cons = box_constraints(3, 2, cap=1.0, comm_budget=2.0, radar_budget=1.5)
    for _ in range(20):
        p = rng.uniform(0.0, 0.3, (3, 3))
        out = project(p, cons)
        assert np.max(np.abs(out - p)) <= 1e-10


def test_project_single_budget_halfspace():
    # N=1, K=1, only the comm budget active: textbook clip onto w <= 2
    cons = box_constraints(1, 1, cap=10.0, comm_budget=2.0, radar_budget=10.0)
    out = project(np.array([[3.0], [0.5]]), cons)
    assert out[0, 0] == pytest.approx(2.0, abs=1e-12)
    assert out[1, 0] == pytest.approx(0.5, abs=1e-12)


def test_project_box_corner():
    cons = box_constraints(1, 1, cap=1.0)
    out = project(np.array([[-3.0], [4.0]]), cons)
    assert out[0, 0] == 0.0
    assert out[1, 0] == pytest.approx(1.0, abs=1e-12)


def test_project_random_points_optimal_vs_witnesses():
    """Output is feasible and closer to the input than 1e4 feasible samples."""
    rng = np.random.default_rng(11)
    n, k = 3, 2
    xi = rng.uniform(1.0, 5.0, n)
    gamma = rng.uniform(0.0, 0.5, n)
    cons = Constraints(upper=np.full((k + 1, n), 1.0), comm_budget=2.0,
                       radar_budget=1.8, xi=xi, gamma=gamma, mu=0.6)

    def feasible_batch(m):
        pts = rng.uniform(0.0, 1.0, (m, k + 1, n))
        comm = pts[:, :k, :].sum(axis=(1, 2))
        radar = pts[:, k, :].sum(axis=1)
        pts[:, :k, :] *= (np.minimum(1.0, 2.0 / np.maximum(comm, 1e-300))
                          * rng.uniform(0.3, 1.0, m))[:, None, None]
        pts[:, k, :] *= np.minimum(1.0, 1.8 / np.maximum(radar, 1e-300))[:, None]
        num = pts[:, k, :] @ xi
        den = 0.6 * ((pts[:, :k, :].sum(axis=1) @ gamma) + n)
        return pts[num >= den]

    witnesses = []
    while sum(w.shape[0] for w in witnesses) < 10_000:
        witnesses.append(feasible_batch(20_000))
    witnesses = np.concatenate(witnesses)[:10_000]

    for _ in range(20):
        x = rng.uniform(-0.5, 2.0, (k + 1, n))
        p = project(x, cons)
        assert cons.relative_violation(p) <= 1e-8
        d_proj = np.linalg.norm(p - x)
        d_wit = float(np.linalg.norm(witnesses - x[None], axis=(1, 2)).min())
        assert d_proj <= d_wit + 1e-9


def test_project_idempotent():
    rng = np.random.default_rng(12)
    n, k = 4, 2
    xi = rng.uniform(1.0, 5.0, n)
    gamma = rng.uniform(0.0, 0.5, n)
    cons = Constraints(upper=np.full((k + 1, n), 1.0), comm_budget=2.0,
                       radar_budget=1.8, xi=xi, gamma=gamma, mu=0.8)
    for _ in range(20):
        x = rng.uniform(-1.0, 2.5, (k + 1, n))
        once = project(x, cons)
        twice = project(once, cons)
        assert np.max(np.abs(twice - once)) <= 1e-9


# ---------------------------------------------------------------------------
# subproblem
# ---------------------------------------------------------------------------

def test_subproblem_zero_aux_returns_start():
    rng = np.random.default_rng(13)
    coeffs = random_bundle(rng, 3, 2)
    cons = box_constraints(3, 2)
    p0 = rng.uniform(0.0, 0.5, (3, 3))
    aux = AuxiliaryMatrix(np.zeros((3, 2)))
    p, _ = solve_subproblem(p0, aux, coeffs, 0.5, cons)
    assert np.array_equal(p, p0)


def test_subproblem_single_entry_hits_cap():
    """K=1 own power only appears under the sqrt, so the box corner wins."""
    coeffs = CoefficientBundle(alpha=np.array([[1.0]]), beta=np.array([[0.0]]),
                               xi=np.ones(1), gamma=np.zeros(1))
    cons = box_constraints(1, 1, cap=0.7, comm_budget=5.0, radar_budget=5.0)
    p0 = np.array([[0.1], [0.0]])
    aux = update_y(np.array([[0.4], [0.0]]), coeffs, 0.5)
    p, _ = solve_subproblem(p0, aux, coeffs, 0.5, cons)
    assert p[0, 0] == pytest.approx(0.7, abs=1e-6)


def test_subproblem_never_decreases_q_and_stays_feasible():
    rng = np.random.default_rng(14)
    for _ in range(10):
        n, k = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        coeffs = random_bundle(rng, n, k, beta_scale=0.5)
        cons = Constraints(upper=np.full((k + 1, n), 1.0), comm_budget=1.5,
                           radar_budget=1.5, xi=coeffs.xi, gamma=coeffs.gamma,
                           mu=0.4)
        p0 = find_feasible(coeffs, cons)
        aux = update_y(p0, coeffs, 0.5)
        p, _ = solve_subproblem(p0, aux, coeffs, 0.5, cons)
        assert q_value(p, aux, coeffs, 0.5) >= q_value(p0, aux, coeffs, 0.5) - 1e-12
        assert cons.relative_violation(p) <= 1e-8


def test_subproblem_beats_dense_grid():
    """Grid oracle: ascent result >= best of 17^4 feasible grid points."""
    rng = np.random.default_rng(3)
    for _ in range(2):
        n, k = 2, 1
        coeffs = random_bundle(rng, n, k)
        cons = Constraints(upper=np.full((k + 1, n), 1.0), comm_budget=1.5,
                           radar_budget=1.5, xi=coeffs.xi, gamma=coeffs.gamma,
                           mu=0.4)
        p0 = find_feasible(coeffs, cons)
        aux = update_y(p0, coeffs, 0.5)
        p_star, _ = solve_subproblem(p0, aux, coeffs, 0.5, cons)
        q_star = q_value(p_star, aux, coeffs, 0.5)

        grid = np.linspace(0.0, 1.0, 17)
        best = -np.inf
        for w0, w1 in itertools.product(grid, grid):
            if w0 + w1 > cons.comm_budget:
                continue
            for r0, r1 in itertools.product(grid, grid):
                if r0 + r1 > cons.radar_budget:
                    continue
                if (coeffs.xi[0] * r0 + coeffs.xi[1] * r1
                        < cons.mu * (coeffs.gamma[0] * w0 + coeffs.gamma[1] * w1 + n)):
                    continue
                try:
                    q = q_value(np.array([[w0, w1], [r0, r1]]), aux, coeffs, 0.5)
                except QDomainError:
                    continue
                best = max(best, q)
        assert q_star >= best - 1e-9


# ---------------------------------------------------------------------------
# feasibility helpers
# ---------------------------------------------------------------------------

def test_max_radar_sinr_two_subcarriers():
    coeffs = CoefficientBundle(alpha=np.ones((2, 1)), beta=np.zeros((2, 1)),
                               xi=np.array([3.0, 1.0]), gamma=np.zeros(2))
    cons = box_constraints(2, 1, cap=1.0, radar_budget=1.0)
    sinr, radar = max_radar_sinr(coeffs, cons)
    assert sinr == pytest.approx(1.5, abs=1e-15)
    assert np.allclose(radar, [1.0, 0.0])


def test_max_radar_sinr_budget_covers_all_caps():
    coeffs = CoefficientBundle(alpha=np.ones((3, 1)), beta=np.zeros((3, 1)),
                               xi=np.array([2.0, 1.0, 3.0]), gamma=np.zeros(3))
    cons = box_constraints(3, 1, cap=0.5, radar_budget=10.0)
    _, radar = max_radar_sinr(coeffs, cons)
    assert np.allclose(radar, 0.5)


def test_max_radar_sinr_beats_random_witnesses():
    rng = np.random.default_rng(15)
    for _ in range(5):
        n = int(rng.integers(2, 6))
        coeffs = random_bundle(rng, n, 1)
        cons = box_constraints(n, 1, cap=1.0, radar_budget=float(rng.uniform(0.5, n)))
        best, _ = max_radar_sinr(coeffs, cons)
        r = rng.uniform(0.0, 1.0, (10_000, n))
        scale = np.minimum(1.0, cons.radar_budget / np.maximum(r.sum(axis=1), 1e-300))
        r *= scale[:, None]
        witness = (r @ coeffs.xi / n).max()
        assert best >= witness - 1e-12


def test_find_feasible_zero_floor():
    rng = np.random.default_rng(16)
    coeffs = random_bundle(rng, 4, 2)
    cons = box_constraints(4, 2, cap=1.0, comm_budget=2.0, radar_budget=2.0)
    p = find_feasible(coeffs, cons)
    assert cons.relative_violation(p) == 0.0
    assert p[:-1, :].sum() > 0.0


def test_find_feasible_infeasible_floor():
    coeffs = CoefficientBundle(alpha=np.ones((2, 1)), beta=np.zeros((2, 1)),
                               xi=np.array([3.0, 1.0]), gamma=np.zeros(2))
    cons = box_constraints(2, 1, cap=1.0, radar_budget=1.0,
                           xi=np.array([3.0, 1.0]), mu=1.5 * 1.0001)
    with pytest.raises(Infeasible):
        find_feasible(coeffs, cons)
    cons_ok = box_constraints(2, 1, cap=1.0, radar_budget=1.0,
                              xi=np.array([3.0, 1.0]), mu=1.5 * 0.9999)
    find_feasible(coeffs, cons_ok)  # must not raise


def test_find_feasible_strict_slack():
    """Positive entries keep >= 1e-9 slack against caps, budgets, SINR."""
    rng = np.random.default_rng(17)
    for _ in range(10):
        n, k = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        coeffs = random_bundle(rng, n, k)
        cons = Constraints(upper=np.full((k + 1, n), 1.0),
                           comm_budget=float(rng.uniform(0.5, k * n)),
                           radar_budget=float(rng.uniform(0.5, n)),
                           xi=coeffs.xi, gamma=coeffs.gamma, mu=0.3)
        p = find_feasible(coeffs, cons)
        assert np.all(p >= 0.0)
        assert np.all(p <= cons.upper - 1e-9)
        assert p[:-1, :].sum() <= cons.comm_budget - 1e-9
        assert p[-1, :].sum() <= cons.radar_budget - 1e-9
        num = float(coeffs.xi @ p[-1, :])
        den = float(coeffs.gamma @ p[:-1, :].sum(axis=0)) + n
        assert num / den >= cons.mu * (1.0 + 1e-9)


# ---------------------------------------------------------------------------
# full solve
# ---------------------------------------------------------------------------

def test_solve_trace_monotone():
    cfg = ScenarioConfig(n_subcarriers=8, n_users=3, seed=21)
    result = solve(generate_channels(cfg), cfg)
    rates = result.trace[:, 1]
    assert np.all(np.diff(rates) >= -1e-9)
    assert result.feasible


def test_solve_single_user_corner():
    """Huge radar gain, no couplings: comm lands on the box corner."""
    cfg = ScenarioConfig(n_subcarriers=1, n_users=1, seed=1,
                         p_c_max_dbm=33.0, p_c_cap_dbm=30.0)
    ch = generate_channels(cfg)
    ch = ChannelSet(h2=ch.h2, s2=np.zeros_like(ch.s2),
                    g2=np.full(1, 1e6), u2=np.zeros(1),
                    user_dist_m=ch.user_dist_m,
                    radar_user_dist_m=ch.radar_user_dist_m)
    result = solve(ch, cfg)
    want_power = min(cfg.p_c_cap_w, cfg.p_c_max_w)
    alpha = float(ch.h2[0, 0] / cfg.noise_comm_w)
    assert result.assignment.comm_power[0] == pytest.approx(want_power, rel=1e-6)
    assert result.binary_sum_rate == pytest.approx(
        math.log2(1.0 + alpha * want_power), rel=1e-9)


def test_solve_infeasible_raises():
    cfg = ScenarioConfig(n_subcarriers=4, n_users=2, seed=3, sinr_floor_db=80.0)
    with pytest.raises(Infeasible):
        solve(generate_channels(cfg), cfg)


def test_solve_binary_close_to_relaxed():
    cfg = ScenarioConfig(n_subcarriers=8, n_users=3, seed=23)
    result = solve(generate_channels(cfg), cfg)
    assert result.binary_sum_rate >= (1.0 - 0.005) * result.relaxed_sum_rate
    assert result.achieved_sinr_db >= cfg.sinr_floor_db - 1e-6


def test_solve_near_oracle_single_instance():
    from rcc_alloc.oracle import brute_force, random_toy_instance
    config, channels = random_toy_instance(3, 2, seed=0)
    result = solve(channels, config)
    oracle_rate, _ = brute_force(channels, config)
    assert result.binary_sum_rate >= 0.98 * oracle_rate


def test_solve_warm_start_continuation():
    cfg = ScenarioConfig(n_subcarriers=8, n_users=3, seed=24, sinr_floor_db=20.0)
    ch = generate_channels(cfg)
    tight = solve(ch, cfg)
    import dataclasses
    looser = dataclasses.replace(cfg, sinr_floor_db=15.0)
    warm = solve(ch, looser, init_power=tight.power.entries)
    assert warm.feasible
    assert warm.binary_sum_rate >= tight.binary_sum_rate - 1e-9


def test_solver_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(outer_tol=0.0)
    with pytest.raises(ValueError):
        SolverSettings(armijo_shrink=1.5)
    with pytest.raises(ValueError):
        SolverSettings(n_starts=0)
