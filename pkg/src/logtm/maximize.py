"""Constrained maximization of the log energies over radial profiles.

Ball:   Phi(u) = b0(1_{B_1} G(u))  over |grad u|_N <= 1, u(1) = 0.
Space:  Psi(u) = b0(G(u))          over ||u||_{W^{1,N}} <= 1, truncated to B_R.

Projected ascent in a Sobolev metric: the nodal gradient is preconditioned
by the matrix of the constraint's quadratic form (weighted stiffness, plus
the mass matrix on the whole space), a step is taken, the profile is
projected onto nonincreasing nonnegative sequences (pool adjacent
violators) and pulled back into the unit ball by scaling.  For N = 2 the
metric is exactly the constraint form, so a fixed point of the iteration is
a discrete solution of the weak Euler-Lagrange identity.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import isotonic_regression

from .bridge import tail_bound
from .errors import SaturationError, UsageError
from .euler_lagrange import _norm_kind, el_residual, estimate_theta, working_profile
from .growth import check_growth_class, growth_eval
from .kernel import b0_gradient, b0_radial
from .radial import RadialGrid, RadialProfile, constraint_norm, rescale_to_ball

R_MIN = 1e-6
METRIC_FLOOR = 1e-2


@dataclass(frozen=True)
class MaximizeOptions:
    grid_size: int = 512
    max_iters: int = 5000
    step0: float = 0.1
    tol: float = 1e-9
    monotone_projection: bool = True
    seed: int = 0
    radius: float = 32.0
    n_test: int = 16


@dataclass(frozen=True)
class MaximizeResult:
    profile: RadialProfile
    phi_value: float
    theta: float
    iterations: int
    constraint_residual: float
    el_residual: float
    converged: bool
    tail: float
    history: tuple = field(default=(), repr=False)

    @staticmethod
    def csv_header():
        return "domain,n,beta,c,phi,theta,constraint_residual,el_residual,iterations,converged,tail"

    def csv_row(self, domain, n, beta, c):
        vals = [self.phi_value, self.theta, self.constraint_residual, self.el_residual]
        return ",".join([domain, str(n), repr(float(beta)), repr(float(c))]
                        + [repr(float(x)) for x in vals]
                        + [str(self.iterations), str(self.converged).lower(), repr(float(self.tail))])


def optimization_grid(domain, size, radius=32.0):
    """Uniform nodes merged with log-spaced ones: ``size`` nodes on [0, 1] or [0, R]."""
    top = 1.0 if _norm_kind(domain) == "gradient" else float(radius)
    half = size // 2
    nodes = np.unique(np.concatenate((np.linspace(0.0, top, half), np.geomspace(R_MIN, top, size - half + 1))))
    return RadialGrid(nodes)


def objective(u, spec, domain, p):
    """Phi (ball) or the truncated Psi (space) of a profile."""
    w = working_profile(u, domain)
    gv, _ = growth_eval(spec, w.values)
    return b0_radial(w.with_values(gv), p)


def objective_gradient(u, spec, domain, p):
    """Exact nodal gradient of :func:`objective`: 2 b0(G(u), phi_j) g(u_j) at node j."""
    w = working_profile(u, domain)
    gv, dg = growth_eval(spec, w.values)
    return w.with_values(b0_gradient(gv, w.grid, p) * dg)


def _metric_bands(w, domain, p):
    """Banded matrix of omega int (|u'|^(N-2) + floor) phi_i' phi_j' r^(N-1) [+ mass], last node removed."""
    nodes = w.nodes
    s = np.abs(w.slopes())
    weight = s ** (p.n - 2) if p.n > 2 else np.ones_like(s)
    weight = weight + METRIC_FLOOR * (np.max(weight) if p.n > 2 else 0.0)
    k = p.omega * weight * (nodes[1:] ** p.n - nodes[:-1] ** p.n) / p.n / w.grid.widths ** 2
    diag = np.zeros(nodes.size)
    diag[:-1] += k
    diag[1:] += k
    off = -k
    if domain == "space":
        cells = w.grid.cells
        m = p.omega * cells.w * cells.x ** (p.n - 1)
        diag[:-1] += np.sum(m * (1.0 - cells.t) ** 2, axis=1)
        diag[1:] += np.sum(m * cells.t ** 2, axis=1)
        off = off + np.sum(m * cells.t * (1.0 - cells.t), axis=1)
    free = nodes.size - 1
    bands = np.zeros((3, free))
    bands[0, 1:] = off[:free - 1]
    bands[1] = diag[:free]
    bands[2, :-1] = off[:free - 1]
    return bands


def _precondition(w, grad, domain, p):
    d = np.zeros_like(grad)
    d[:-1] = solve_banded((1, 1), _metric_bands(w, domain, p), grad[:-1])
    return d


def _project(values, grid, domain, p, monotone):
    vals = np.array(values, dtype=float)
    if monotone:
        vals = isotonic_regression(vals, increasing=False).x
    vals = np.clip(vals, 0.0, None)
    vals[-1] = 0.0
    prof = RadialProfile(grid, vals)
    with np.errstate(over="ignore"):
        norm = constraint_norm(prof, _norm_kind(domain), p)
    if not np.isfinite(norm):
        raise SaturationError("trial step left the floating-point range", float(np.max(vals)))
    return rescale_to_ball(prof, _norm_kind(domain), p)


def initial_profile(grid, domain, p, seed=0, radius=None):
    """(1 - r) on the ball, (1 - r/R)_+ on the space, scaled into the unit ball; seed != 0 perturbs."""
    r = grid.nodes
    top = grid.radius if radius is None else radius
    vals = np.clip(1.0 - r / top, 0.0, None)
    if seed:
        rng = np.random.default_rng(seed)
        vals = vals * (1.0 + 0.1 * rng.standard_normal(vals.size))
    return _project(vals, grid, domain, p, monotone=True)


def _bump(grid, domain, p):
    vals = np.exp(-grid.nodes ** 2)
    return _project(vals - vals[-1], grid, domain, p, monotone=True)


def maximize(spec, domain, p, opts=MaximizeOptions()):
    kind = _norm_kind(domain)
    if domain == "ball":
        rep = check_growth_class(spec, p.beta_star, "at_most")
        if not rep.holds:
            warnings.warn("growth is not below the critical envelope; the supremum may be infinite",
                          RuntimeWarning, stacklevel=2)
    elif spec.family not in ("space_critical", "subcritical", "tabulated") or float(growth_eval(spec, 0.0)[0]) != 0.0:
        raise UsageError("the whole-space problem needs G(0) = 0")

    grid = optimization_grid(domain, opts.grid_size, opts.radius)
    u = initial_profile(grid, domain, p, opts.seed)
    grad = objective_gradient(u, spec, domain, p).values
    if not np.any(grad != 0.0):
        u = _bump(grid, domain, p)
        grad = objective_gradient(u, spec, domain, p).values
    phi = objective(u, spec, domain, p)
    history = [phi]

    d = _precondition(u, grad, domain, p)
    step = opts.step0 / max(constraint_norm(u.with_values(d), kind, p), 1e-300)
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        if it > 1:
            grad = objective_gradient(u, spec, domain, p).values
            d = _precondition(u, grad, domain, p)
        accepted = False
        while step > 1e-300:
            try:
                cand = _project(u.values + step * d, grid, domain, p, opts.monotone_projection)
                phi_c = objective(cand, spec, domain, p)
            except SaturationError:
                step *= 0.5
                continue
            if phi_c > phi:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True  # no ascent direction left at floating-point resolution
            break
        change = (phi_c - phi) / abs(phi)
        u, phi = cand, phi_c
        history.append(phi)
        step *= 2.0
        if change < opts.tol:
            converged = True
            break

    theta = estimate_theta(u, spec, domain, p)
    res = el_residual(u, theta, spec, domain, p, opts.n_test, radius=grid.radius)
    tail = tail_bound(u, p, grid.radius, spec) if domain == "space" else 0.0
    return MaximizeResult(
        profile=u,
        phi_value=phi,
        theta=theta,
        iterations=it,
        constraint_residual=abs(constraint_norm(u, kind, p) - 1.0),
        el_residual=res,
        converged=converged,
        tail=tail,
        history=tuple(history),
    )


def truncated_log_profile(grid, a, rho):
    """a min(1, ln(1/r) / ln(1/rho)), zero at r >= 1."""
    r = grid.nodes
    with np.errstate(divide="ignore"):
        vals = a * np.minimum(1.0, np.log(1.0 / np.maximum(r, 1e-300)) / np.log(1.0 / rho))
    return RadialProfile(grid, np.clip(vals, 0.0, None))


def brute_force_best(spec, domain, p, grid, amplitudes=32, radii=32):
    """Best energy over the rescaled truncated-log family u_{a, rho}.

    a runs over ``amplitudes`` fractions of the level at which u_{a, rho} has
    unit gradient norm, rho over ``radii`` log-spaced values in [1e-4, 0.5].
    """
    kind = _norm_kind(domain)
    best = -np.inf
    arg = None
    for rho in np.geomspace(1e-4, 0.5, radii):
        a_unit = (np.log(1.0 / rho) ** (p.n - 1) / p.omega) ** (1.0 / p.n)
        for frac in np.linspace(1.0 / amplitudes, 1.0, amplitudes):
            u = rescale_to_ball(truncated_log_profile(grid, frac * a_unit, rho), kind, p)
            try:
                val = objective(u, spec, domain, p)
            except SaturationError:
                continue
            if val > best:
                best, arg = val, (frac * a_unit, rho)
    return best, arg


def results_to_csv(rows):
    """rows: iterable of (domain, n, beta, c, MaximizeResult)."""
    buf = io.StringIO()
    buf.write(MaximizeResult.csv_header() + "\n")
    for domain, n, beta, c, res in rows:
        buf.write(res.csv_row(domain, n, beta, c) + "\n")
    return buf.getvalue()
