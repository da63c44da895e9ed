import math
import warnings

import numpy as np
import pytest

from logtm.bridge import random_feasible_profile
from logtm.errors import DomainError, NumericalConsistencyError, UsageError
from logtm.euler_lagrange import (el_report, el_residual, estimate_theta, h_ball, hat_centres, potential_f,
                                  theta_least_squares)
from logtm.growth import ball_critical, space_critical
from logtm.kernel import b0_gradient
from logtm.maximize import (MaximizeOptions, brute_force_best, initial_profile, maximize, objective,
                            objective_gradient, optimization_grid, results_to_csv, truncated_log_profile)
from logtm.radial import RadialGrid, RadialProfile, constraint_norm, dim_params

P2, P3 = dim_params(2), dim_params(3)
BALL_SPEC = ball_critical(-1.5, 1.0, P2)


@pytest.fixture(scope="module")
def ball_result():
    return maximize(BALL_SPEC, "ball", P2, MaximizeOptions(grid_size=256))


def test_h_ball_closed_form():
    grid = RadialGrid.uniform(1.0, 1001)
    h = h_ball(RadialProfile(grid, np.ones(grid.size)), P2)
    assert h(0.5) == pytest.approx(0.1875, rel=1e-8)
    np.testing.assert_allclose(h.values[1:], (1 - grid.nodes[1:] ** 2) / 4, rtol=1e-6, atol=1e-12)
    with pytest.raises(DomainError):
        h_ball(RadialProfile(RadialGrid.uniform(2.0, 5), np.ones(5)), P2)


def test_unit_form_gradient_is_h():
    # 2 b0(1_{B_1}, phi_j) = 2 omega^2 int h phi_j r dr, lumped ~ 2 omega^2 h(r_j) w_j
    grid = RadialGrid.uniform(1.0, 801)
    grad = b0_gradient(np.ones(grid.size), grid, P2)
    lumped = 2 * P2.omega ** 2 * (1 - grid.nodes ** 2) / 4 * grid.nodes * grid.trapezoid_weights
    np.testing.assert_allclose(grad[100:700], lumped[100:700], rtol=1e-4)


def test_potential_monotone_and_guard():
    grid = RadialGrid.geometric(4.0, 300, r_min_ratio=1e-5)
    v = RadialProfile(grid, np.abs(np.sin(5 * grid.nodes)))
    f = potential_f(v, P3)
    assert np.all(np.diff(f.values) <= 1e-9)
    with pytest.raises(NumericalConsistencyError):
        potential_f(v, P3, tol=-1.0)


def test_hat_centres():
    w = RadialProfile(RadialGrid.uniform(8.0, 161), np.zeros(161))
    idx = hat_centres(w, "space", 16, radius=8.0)
    assert w.nodes[idx[-1] + 1] <= 7.0 and idx[0] == 1
    with pytest.raises(UsageError):
        hat_centres(w, "ball", 2)


@pytest.mark.parametrize("p,domain", [(P2, "ball"), (P3, "ball"), (P2, "space"), (P3, "space")])
def test_objective_gradient_finite_differences(p, domain):
    radius = 1.0 if domain == "ball" else 6.0
    grid = RadialGrid(np.concatenate(([0.0], np.geomspace(1e-3, radius, 60))))
    spec = ball_critical(1.5 * p.beta_star, 1.0, p) if domain == "ball" else space_critical(-1.0, 1.0, p)
    u = random_feasible_profile(np.random.default_rng(11), grid, p)
    exact = objective_gradient(u, spec, domain, p).values
    for j in (0, 10, 30, 55):
        e = np.zeros(grid.size)
        e[j] = 1e-6
        fd = (objective(u.with_values(u.values + e), spec, domain, p)
              - objective(u.with_values(u.values - e), spec, domain, p)) / 2e-6
        assert fd == pytest.approx(exact[j], abs=1e-5 * np.max(np.abs(exact)))


def test_maximizer_ball(ball_result):
    res = ball_result
    u = res.profile
    assert res.converged and res.theta > 0
    assert res.constraint_residual <= 1e-6 and u.is_nonincreasing()
    assert np.all(np.diff(res.history) > 0)
    assert res.phi_value > objective(u.scaled(0.0), BALL_SPEC, "ball", P2)
    assert res.el_residual <= 1e-3
    best, (a, rho) = brute_force_best(BALL_SPEC, "ball", P2, u.grid, 8, 8)
    assert res.phi_value >= best and 1e-4 <= rho <= 0.5


def test_theta_estimates_agree(ball_result):
    u = ball_result.profile
    ls = theta_least_squares(u, BALL_SPEC, "ball", P2)
    assert ls == pytest.approx(ball_result.theta, rel=1e-3)


def test_theta_scales_inversely_with_growth_squared(ball_result):
    u = ball_result.profile
    doubled = ball_critical(-1.5, 2.0, P2)
    assert estimate_theta(u, doubled, "ball", P2) == pytest.approx(ball_result.theta / 4, rel=1e-12)


def test_rhs_paths_agree(ball_result):
    u = ball_result.profile
    a = el_report(u, ball_result.theta, BALL_SPEC, "ball", P2)
    b = el_report(u, ball_result.theta, BALL_SPEC, "ball", P2, via_potential=True)
    np.testing.assert_allclose(a.rhs, b.rhs, rtol=1e-8)
    lines = a.to_csv(u.nodes).splitlines()
    assert lines[0] == "node,lhs,rhs,residual" and lines[-1].startswith("max,")


def test_residual_detects_non_stationary_profile(ball_result):
    u = ball_result.profile
    bumped = u.with_values(u.values * (1 + 0.2 * np.sin(8 * np.pi * u.nodes)))
    theta = estimate_theta(bumped, BALL_SPEC, "ball", P2)
    assert el_residual(bumped, theta, BALL_SPEC, "ball", P2) > 100 * ball_result.el_residual


def test_space_requires_vanishing_growth():
    with pytest.raises(UsageError):
        maximize(BALL_SPEC, "space", P2, MaximizeOptions(grid_size=64, max_iters=2))


def test_supercritical_growth_warns():
    with pytest.warns(RuntimeWarning):
        maximize(ball_critical(0.0, 1.0, P2), "ball", P2, MaximizeOptions(grid_size=64, max_iters=2))


def test_grids_and_initial_profiles():
    g = optimization_grid("space", 128, radius=16.0)
    assert g.nodes[0] == 0.0 and g.nodes[1] == pytest.approx(1e-6) and g.radius == 16.0
    u = initial_profile(g, "space", P2)
    assert constraint_norm(u, "full", P2) <= 1 + 1e-12 and u.values[-1] == 0.0
    t = truncated_log_profile(optimization_grid("ball", 64), 2.0, 0.1)
    assert t(0.0) == 2.0 and t(1.0) == 0.0
    with pytest.raises(UsageError):
        optimization_grid("torus", 10)


def test_results_csv(ball_result):
    text = results_to_csv([("ball", 2, -1.5, 1.0, ball_result)])
    header, row = text.splitlines()
    assert header.split(",")[:5] == ["domain", "n", "beta", "c", "phi"]
    assert row.startswith("ball,2,-1.5,1.0,")
