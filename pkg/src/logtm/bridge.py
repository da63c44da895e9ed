"""Passing between the whole space and the unit ball.

Radial decay u(r) <= C_N |u|_N / r, the lift U of a whole-space profile to a
W^{1,N}_0(B_1) profile, a truncation estimate for the log energy and the
weighted functional Phi_{beta1, beta2}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .growth import growth_eval
from .kernel import _moments, _outer_weights
from .radial import RadialGrid, RadialProfile, check_same_grid, grad_norm, lp_norm, w1n_norm


@dataclass(frozen=True)
class RadialBoundReport:
    holds: bool
    worst_radius: float
    worst_ratio: float


def _require_nonincreasing(u):
    if not u.is_nonincreasing(tol=1e-12 * max(1.0, float(np.max(np.abs(u.values))))):
        raise UsageError("profile must be nonincreasing")


def restrict_to_unit_ball(u):
    """The profile on [0, 1]: nodes below 1 plus the node 1 itself."""
    nodes = u.nodes
    if nodes[-1] < 1.0:
        raise UsageError(f"grid ends at {nodes[-1]:g} < 1")
    keep = nodes < 1.0
    grid = RadialGrid(np.concatenate((nodes[keep], [1.0])))
    return RadialProfile(grid, np.concatenate((u.values[keep], [u(1.0)])))


def radial_bound_check(u, p):
    """u(r) <= C_N |u|_N / r at every node r > 0."""
    _require_nonincreasing(u)
    norm = lp_norm(u, p.n, p)
    r = u.nodes
    pos = r > 0
    bound = p.c_n * norm / r[pos]
    vals = u.values[pos]
    if norm == 0.0:
        return RadialBoundReport(True, float(r[pos][0]), 0.0)
    ratio = vals / bound
    k = int(np.argmax(ratio))
    return RadialBoundReport(bool(ratio[k] <= 1.0 + 1e-12), float(r[pos][k]), float(ratio[k]))


def lift_to_ball(u, p):
    """U = (1 + u(1)^N / C_N^N)^(1/N) [u^(N/2) - u(1)^(N/2)]_+^(2/N) on [0, 1].

    For N = 2 this is a multiple of (u - u(1))_+ and |grad U|_2 <= 1 follows
    from |u(1)| <= C_2 |u|_2.  For N >= 3 the map s -> (s^(N/2) - a^(N/2))^(2/N)
    has unbounded slope at s = a, so the gradient of U is not controlled by
    that of u near r = 1 when u(1) > 0.
    """
    if np.any(u.values < 0):
        raise DomainError("lift needs a nonnegative profile")
    _require_nonincreasing(u)
    norm = w1n_norm(u, p)
    if norm > 1.0 + 1e-9:
        raise DomainError(f"profile is not feasible: ||u|| = {norm:.12g} > 1")
    ub = restrict_to_unit_ball(u)
    half = p.n / 2.0
    u1 = ub.values[-1]
    bracket = np.clip(ub.values ** half - u1 ** half, 0.0, None) ** (1.0 / half)
    factor = (1.0 + u1 ** p.n / p.c_n ** p.n) ** (1.0 / p.n)
    vals = factor * bracket
    vals[-1] = 0.0
    return RadialProfile(ub.grid, vals)


def lift_inequality_gap(u, lifted, p):
    """min over nodes in [0, 1] of U^q + u(1)^q + C_N^q - u^q, q = N/(N-1)."""
    q = p.critical_power
    ub = restrict_to_unit_ball(u)
    check_same_grid(ub, lifted)
    rhs = lifted.values ** q + ub.values[-1] ** q + p.c_n ** q
    return float(np.min(rhs - ub.values ** q))


def eval_phi_beta(u1, u2, beta1, beta2, p):
    """omega^2 int_0^1 r^(N-1) v1 ln(1/r) int_0^r rho^(N-1) v2 drho dr,
    v_i = (1 + |u_i|)^beta_i e^{alpha_N |u_i|^(N/(N-1))}.
    """
    if beta1 > 0 or beta2 > 0 or beta1 + beta2 > -p.critical_power + 1e-15:
        raise DomainError(
            f"need beta1, beta2 <= 0 and beta1 + beta2 <= -N/(N-1); got {beta1}, {beta2}")
    a = restrict_to_unit_ball(u1)
    b = restrict_to_unit_ball(u2)
    grid = check_same_grid(a, b)
    q = p.critical_power

    def density(vals, beta):
        s = np.abs(vals)
        return np.exp(beta * np.log1p(s) + p.alpha_n * s ** q)

    v1 = density(a.values, beta1)
    v2 = density(b.values, beta2)
    vq1 = grid.cells.interpolate(v1)
    _, _, m2 = _moments(v2, grid, p.n)
    return float(p.omega ** 2 * np.sum(_outer_weights(grid, p.n) * vq1 * m2))


def tail_bound(u, p, radius, spec):
    """Upper bound on |Psi(u) - Psi(u 1_{B_R})|, Psi(u) = b0(G(u), G(u)).

    With v = G(u) and v_out = v 1_{|x| > R}, the neglected part is
    2 b0(v_in, v_out) + b0(v_out, v_out), bounded through
        b+(f, h) <= |ln+(1/|.|)|_1 |f|_inf |h|_1,   |ln+(1/|.|)|_1 = omega / N^2,
        b-(f, h) <= |f|_1 |h|_* + |h|_1 |f|_*.
    Norms of v_in are replaced by those of v, so the bound is nonincreasing
    in R.  Zero when u vanishes beyond R.
    """
    if radius < 1.0:
        raise UsageError(f"truncation radius must be >= 1, got {radius}")
    _require_nonincreasing(u)
    cells = u.grid.cells
    uq = cells.interpolate(u.values)
    outside = cells.x > radius
    if not np.any(outside & (uq != 0.0)):
        return 0.0
    gq = np.asarray(growth_eval(spec, uq)[0])
    meas = p.omega * cells.w * cells.x ** (p.n - 1)
    star = np.log1p(cells.x)

    def norms(mask):
        dens = np.where(mask, gq, 0.0)
        return float(np.sum(meas * dens)), float(np.sum(meas * star * dens)), float(np.max(dens))

    l1_all, st_all, sup_all = norms(np.ones_like(outside))
    l1_out, st_out, sup_out = norms(outside)
    k1 = p.omega / p.n ** 2
    cross = k1 * sup_all * l1_out + l1_all * st_out + l1_out * st_all
    self_term = k1 * sup_out * l1_out + 2.0 * l1_out * st_out
    return float(2.0 * cross + self_term)


def random_feasible_profile(rng, grid, p, norm=None):
    """Seeded nonincreasing profile on the grid, scaled to w1n norm ``norm`` (default random in [0.5, 1])."""
    r = grid.nodes
    k = 3
    amps = rng.uniform(0.2, 1.0, k)
    scales = rng.uniform(0.3, 4.0, k)
    shapes = rng.uniform(1.0, 3.0, k)
    vals = np.sum(amps[:, None] * np.exp(-(r[None, :] / scales[:, None]) ** shapes[:, None]), axis=0)
    vals = vals - vals[-1]
    prof = RadialProfile(grid, vals)
    target = rng.uniform(0.5, 1.0) if norm is None else norm
    return prof.scaled(target / w1n_norm(prof, p))
