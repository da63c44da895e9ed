"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (lines are collected into the terminal summary) or directly
with ``python3 tests/test_acceptance.py``.
"""

import math
import os
import subprocess
import sys
import tempfile
import time

import numpy as np
import pytest

from logtm import cli
from logtm.bridge import lift_inequality_gap, lift_to_ball, random_feasible_profile
from logtm.euler_lagrange import h_ball, potential_f
from logtm.growth import ball_critical, space_critical
from logtm.kernel import b0_radial, b_split_direct, star_norm
from logtm.maximize import MaximizeOptions, brute_force_best, maximize, objective, objective_gradient
from logtm.moser import moser_grid, moser_profile, phi_on_moser, rate_slope, threshold_exponent
from logtm.radial import RadialGrid, RadialProfile, dim_params, grad_norm, lp_norm
from logtm.rearrange import random_profile, random_step_profile, riesz_check, schwarz_symmetrize

ORACLE_GRID = 201
EQUIMEASURE_GRID = 4001


def crit_1():
    t0 = time.perf_counter()
    grid = RadialGrid.uniform(1.0, ORACLE_GRID)
    worst = {}
    for n in (2, 3, 4):
        p = dim_params(n)
        rel = []
        for seed in range(5):
            v = random_step_profile(np.random.default_rng(seed), grid)
            rep = b_split_direct(v, v, p, 2048)
            rel.append(abs(b0_radial(v, p) - (rep.b_plus - rep.b_minus)) / max(1.0, abs(rep.b0)))
        worst[n] = max(rel)
    elapsed = time.perf_counter() - t0
    ok = all(w <= 5e-3 for w in worst.values()) and elapsed < 60
    detail = ", ".join(f"N={n}: max rel gap {w:.2e}" for n, w in worst.items()) + f"; {elapsed:.1f} s"
    return ok, detail


def crit_2():
    grid = RadialGrid.uniform(1.0, 4096)
    errs = []
    for n in (2, 3):
        p = dim_params(n)
        exact = p.omega ** 2 / (2 * n ** 3)
        errs.append(abs(b0_radial(RadialProfile(grid, np.ones(grid.size)), p) / exact - 1.0))
    p = dim_params(2)
    one = RadialProfile(grid, np.ones(grid.size))
    star_err = abs(star_norm(one, p) - math.pi / 2)
    h_err = abs(h_ball(one, p)(0.5) - 0.1875)
    ok = max(errs) <= 1e-6 and star_err <= 1e-8 and h_err <= 1e-8
    return ok, f"b0 rel err {max(errs):.1e}; star err {star_err:.1e}; h(0.5) err {h_err:.1e}"


def crit_3():
    worst = 0.0
    for n in (2, 3):
        p = dim_params(n)
        for k in (10, 100, 1000, 10000):
            worst = max(worst, abs(grad_norm(moser_profile(k, p, moser_grid(k)), p) - 1.0))
    return worst <= 1e-4, f"max | |grad m_n|_N - 1 | = {worst:.2e}"


def crit_4():
    ok = True
    parts = []
    ns = (100, 1000, 10000, 100000)
    for n in (2, 3):
        p = dim_params(n)
        above = ball_critical(p.beta_star + 0.25, 1.0, p)
        rows = [phi_on_moser(k, above, p) for k in ns]
        bounded = all(r.phi >= r.lower_bound for r in rows)
        increasing = all(b.phi > a.phi for a, b in zip(rows, rows[1:]))
        slope_rows = [phi_on_moser(k, above, p) for k in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)]
        slope = rate_slope(slope_rows)
        target = threshold_exponent(n, above.beta)
        below = ball_critical(p.beta_star - 0.25, 1.0, p)
        slope_below = rate_slope([phi_on_moser(k, below, p) for k in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)])
        good = bounded and increasing and abs(slope - target) <= 0.3 and slope_below <= 0.05
        ok &= good
        parts.append(f"N={n}: slope {slope:.3f} vs {target:.3f}, below {slope_below:.3f}, "
                     f"bound {'ok' if bounded else 'VIOLATED'}, increasing {increasing}")
    return ok, "; ".join(parts)


def crit_5():
    vals = [threshold_exponent(n, -n / (2 * (n - 1))) for n in range(2, 11)]
    ok = all(v == 0.0 for v in vals) and threshold_exponent(2, -1.0) == 0.0
    return ok, f"exponents at beta*: {sorted(set(vals))}"


def crit_6():
    oracle_grid = RadialGrid.uniform(1.0, ORACLE_GRID)
    fine_grid = RadialGrid.uniform(1.0, EQUIMEASURE_GRID)
    worst_gap = math.inf
    worst_eq = 0.0
    for n in (2, 3):
        p = dim_params(n)
        for seed in range(20):
            rep = riesz_check(random_profile(np.random.default_rng(seed), oracle_grid), p, 2048)
            worst_gap = min(worst_gap, rep.bplus_gap, rep.bminus_gap, rep.polya_gap)
            v = random_profile(np.random.default_rng(seed), fine_grid)
            vs = schwarz_symmetrize(v, p)
            for q in (1, 2, 4):
                worst_eq = max(worst_eq, abs(lp_norm(vs, q, p) / lp_norm(v, q, p) - 1.0))
    ok = worst_gap >= -1e-4 and worst_eq <= 1e-6
    return ok, f"min gap {worst_gap:.3e}; max L^p mismatch {worst_eq:.2e}"


def crit_7():
    t0 = time.perf_counter()
    p = dim_params(2)
    spec = ball_critical(-1.5, 1.0, p)
    res = maximize(spec, "ball", p, MaximizeOptions(grid_size=512))
    elapsed = time.perf_counter() - t0
    u = res.profile
    phi0 = objective(u.scaled(0.0), spec, "ball", p)
    best, _ = brute_force_best(spec, "ball", p, u.grid)
    ok = (res.converged and u.is_nonincreasing() and np.min(u.values[1:-1]) > 0
          and res.constraint_residual <= 1e-6 and res.phi_value > phi0
          and res.phi_value >= best - 1e-6 and res.theta > 0 and res.el_residual <= 1e-3 and elapsed < 120)
    return ok, (f"phi {res.phi_value:.6g} (phi(0) {phi0:.6g}, brute force {best:.6g}), theta {res.theta:.4g}, "
                f"EL {res.el_residual:.1e}, constraint {res.constraint_residual:.1e}, {res.iterations} it, {elapsed:.1f} s")


def crit_8():
    p = dim_params(2)
    spec = space_critical(-1.5, 1.0, p)
    res = maximize(spec, "space", p, MaximizeOptions(grid_size=512, radius=32.0))
    ok = (res.converged and res.tail <= 1e-6 * res.phi_value and res.constraint_residual <= 1e-6
          and res.theta > 0 and res.el_residual <= 1e-3)
    return ok, (f"psi {res.phi_value:.6g}, tail {res.tail:.1e}, theta {res.theta:.4g}, "
                f"EL {res.el_residual:.1e}, constraint {res.constraint_residual:.1e}")


def _fd_gradient(u, spec, domain, p, h=1e-6):
    vals = u.values
    out = np.zeros(vals.size)
    for j in range(vals.size - 1):
        e = np.zeros(vals.size)
        step = h * max(1.0, abs(vals[j]))
        e[j] = step
        out[j] = (objective(u.with_values(vals + e), spec, domain, p)
                  - objective(u.with_values(vals - e), spec, domain, p)) / (2 * step)
    return out


def crit_9():
    worst = 0.0
    for n in (2, 3):
        p = dim_params(n)
        for domain in ("ball", "space"):
            radius = 1.0 if domain == "ball" else 8.0
            grid = RadialGrid(np.concatenate(([0.0], np.geomspace(1e-3, radius, 120))))
            spec = ball_critical(1.5 * p.beta_star, 1.0, p) if domain == "ball" else space_critical(-1.0, 1.0, p)
            for seed in range(3):
                u = random_feasible_profile(np.random.default_rng(seed), grid, p)
                exact = objective_gradient(u, spec, domain, p).values
                fd = _fd_gradient(u, spec, domain, p)
                worst = max(worst, np.max(np.abs(exact[:-1] - fd[:-1])) / np.max(np.abs(exact)))
    return worst <= 1e-5, f"max relative gradient error {worst:.2e}"


def crit_10():
    grid = RadialGrid.geometric(4.0, 400, r_min_ratio=1e-6)
    count = 0
    for n in (2, 3):
        p = dim_params(n)
        for seed in range(10):
            rng = np.random.default_rng(seed)
            v = RadialProfile(grid, np.abs(rng.normal(size=grid.size)) * (grid.nodes < 2.0 + rng.uniform()))
            potential_f(v, p)
            count += 1
    return True, f"{count} potentials nonincreasing"


def crit_11():
    grid = RadialGrid.uniform(32.0, 3201)
    parts = []
    ok = True
    for n in (2, 3):
        p = dim_params(n)
        worst_grad, worst_gap = 0.0, math.inf
        for seed in range(20):
            u = random_feasible_profile(np.random.default_rng(seed), grid, p)
            lifted = lift_to_ball(u, p)
            worst_grad = max(worst_grad, grad_norm(lifted, p))
            worst_gap = min(worst_gap, lift_inequality_gap(u, lifted, p))
        good = worst_grad <= 1 + 1e-6 and worst_gap >= 0
        ok &= good
        parts.append(f"N={n}: max |grad U| {worst_grad:.4f}, min pointwise slack {worst_gap:.3e}")
    return ok, "; ".join(parts)


CLI_RUNS = [
    ["dims", "--n", "2,3,4"],
    ["verify-kernel", "--n-dim", "2", "--profiles", "2", "--grid", "65", "--angular", "256"],
    ["rearrange-check", "--n-dim", "2", "--profiles", "2", "--grid", "65", "--angular", "256"],
    ["moser", "--n-dim", "2", "--beta", "-0.75", "--n", "100,1000,10000"],
    ["maximize", "--n-dim", "2", "--beta", "-1.5", "--grid", "128"],
    ["el-check", "--n-dim", "2", "--beta", "-1.5", "--grid", "128", "--domain", "space"],
]
SWEEP = ["sweep", "--n-dim", "2,3", "--n", "1000,10000,100000"]


def _cli_bytes(args):
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "out.csv")
        proc = subprocess.run([sys.executable, "-m", "logtm", *args, "--out", path],
                              capture_output=True, text=True)
        if not os.path.exists(path):
            return proc.returncode, b""
        with open(path, "rb") as fh:
            return proc.returncode, fh.read()


def crit_12():
    mismatched = []
    for args in CLI_RUNS:
        first, second = _cli_bytes(args), _cli_bytes(args)
        if first != second or not first[1]:
            mismatched.append(args[0])
    serial = _cli_bytes(SWEEP + ["--jobs", "1"])
    parallel = _cli_bytes(SWEEP + ["--jobs", "2"])
    if serial != parallel or not serial[1]:
        mismatched.append("sweep")
    return not mismatched, "identical outputs" if not mismatched else f"differs: {mismatched}"


CRITERIA = [
    (1, "kernel oracle equivalence", crit_1),
    (2, "closed forms", crit_2),
    (3, "Moser normalization", crit_3),
    (4, "blow-up above threshold", crit_4),
    (5, "threshold identity", crit_5),
    (6, "rearrangement suite", crit_6),
    (7, "maximizer run (ball)", crit_7),
    (8, "maximizer run (space)", crit_8),
    (9, "gradient check", crit_9),
    (10, "potential monotonicity", crit_10),
    (11, "lift feasibility", crit_11),
    (12, "determinism", crit_12),
]


def _line(number, title, ok, detail):
    return f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, check, acceptance_log):
    try:
        ok, detail = check()
    except Exception as exc:  # a raised error is a failed criterion, reported like the others
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = _line(number, title, ok, detail)
    acceptance_log.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failures = 0
    for number, title, check in CRITERIA:
        ok, detail = check()
        failures += not ok
        print(_line(number, title, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
