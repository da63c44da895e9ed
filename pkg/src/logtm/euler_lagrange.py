"""Lagrange multiplier and weak Euler-Lagrange defect of constrained maximizers.

The weak identity tested against a radial function phi is

    omega int |u'|^(N-2) u' phi' r^(N-1) dr [+ omega int |u|^(N-2) u phi r^(N-1) dr]
        = theta b0(G(u), g(u) phi),

the bracket present on the whole space only.  The right side is evaluated
with the same discrete form that the maximizer differentiates, so a
discrete stationary point has zero defect up to the optimizer tolerance.
Potentials carry no 1/gamma_N normalisation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProfileError, DomainError, NumericalConsistencyError, UsageError
from .growth import growth_eval
from .kernel import _log_inv, _moments, b0_cross, b0_gradient, potential_log, potential_nodes
from .radial import RadialProfile, constraint_norm


def _norm_kind(domain):
    if domain == "ball":
        return "gradient"
    if domain == "space":
        return "full"
    raise UsageError(f"domain must be 'ball' or 'space', got {domain!r}")


def working_profile(u, domain):
    """The part of u the energy sees: [0, 1] for the ball, the whole grid otherwise."""
    from .bridge import restrict_to_unit_ball

    _norm_kind(domain)
    return restrict_to_unit_ball(u) if domain == "ball" else u


def h_ball(v, p):
    """ln(1/r) int_0^r rho^(N-1) v + int_r^1 rho^(N-1) ln(1/rho) v at every node in [0, 1]."""
    if np.any(v.values < 0):
        raise DomainError("density must be nonnegative")
    if np.any(v.values[v.nodes > 1.0] != 0.0):
        raise DomainError("density must be supported in [0, 1]")
    vb = working_profile(v, "ball")
    return RadialProfile(vb.grid, potential_nodes(vb.values, vb.grid, p) / p.omega)


def potential_f(v, p, tol=1e-9):
    """ln(1/|.|) * v, checked to be nonincreasing in r."""
    f = potential_log(v, p)
    rise = np.diff(f.values)
    if np.any(rise > tol):
        j = int(np.argmax(rise))
        raise NumericalConsistencyError(
            f"potential increases by {rise[j]:.3g} between r={f.nodes[j]:g} and r={f.nodes[j + 1]:g}")
    return f


def _composed(u, spec):
    gv, dg = growth_eval(spec, u.values)
    return np.asarray(gv, dtype=float), np.asarray(dg, dtype=float)


def estimate_theta(u, spec, domain, p):
    """theta = ||u||^N / b0(G(u), g(u) u): the weak identity tested with phi = u."""
    w = working_profile(u, domain)
    if not np.any(w.values != 0.0):
        raise DomainError("theta is undefined at u = 0")
    gv, dg = _composed(w, spec)
    denom = b0_cross(w.with_values(gv), w.with_values(dg * w.values), p)
    if denom == 0.0:
        raise DegenerateProfileError("b0(G(u), g(u) u) vanishes")
    return constraint_norm(w, _norm_kind(domain), p) ** p.n / denom


def hat_centres(w, domain, n_test, radius=None):
    """Indices of hat centres, equally spaced in index over the admissible interior nodes."""
    if n_test < 4:
        raise UsageError(f"n_test must be >= 4, got {n_test}")
    nodes = w.nodes
    if domain == "space":
        limit = (nodes[-1] if radius is None else radius) - 1.0
        last = int(np.searchsorted(nodes, limit, side="right")) - 2  # hat support [r_{i-1}, r_{i+1}]
    else:
        last = nodes.size - 2
    if last < n_test:
        raise UsageError("grid too coarse for the requested number of test functions")
    return np.unique(np.round(np.linspace(1, last, n_test)).astype(int))


def _lhs_all(w, domain, p):
    """Left side of the weak identity against every hat function, as a nodal vector."""
    nodes = w.nodes
    s = w.slopes()
    shell = (nodes[1:] ** p.n - nodes[:-1] ** p.n) / p.n
    flux = p.omega * np.abs(s) ** (p.n - 2) * s * shell / w.grid.widths
    lhs = np.zeros(nodes.size)
    lhs[:-1] -= flux
    lhs[1:] += flux
    if domain == "space":
        cells = w.grid.cells
        uq = cells.interpolate(w.values)
        dens = p.omega * cells.w * cells.x ** (p.n - 1) * np.abs(uq) ** (p.n - 2) * uq
        lhs[:-1] += np.sum(dens * (1.0 - cells.t), axis=1)
        lhs[1:] += np.sum(dens * cells.t, axis=1)
    return lhs


def _rhs_unit(w, spec, p):
    """b0(G(u), g(u_i) phi_i) for every node i."""
    gv, dg = _composed(w, spec)
    return 0.5 * b0_gradient(gv, w.grid, p) * dg


def _rhs_unit_via_potential(w, spec, p):
    """The same quantity as omega int f g(u_i) phi_i r^(N-1) dr with f = ln(1/|.|) * G(u)."""
    gv, dg = _composed(w, spec)
    grid = w.grid
    cells = grid.cells
    n = p.n
    _, _, m_q = _moments(gv, grid, n)
    cell_outer = np.sum(cells.w * cells.x ** (n - 1) * _log_inv(cells.x) * cells.interpolate(gv), axis=1)
    t_nodes = np.concatenate((np.cumsum(cell_outer[::-1])[::-1], [0.0]))
    inside = cells.partial_moment(gv[:-1], gv[1:], n, weight=_log_inv)
    t_q = t_nodes[1:, None] + cell_outer[:, None] - inside
    f_q = p.omega * (_log_inv(cells.x) * m_q + t_q)
    base = p.omega * cells.w * cells.x ** (n - 1) * f_q
    out = np.zeros(grid.size)
    out[:-1] += np.sum(base * (1.0 - cells.t), axis=1)
    out[1:] += np.sum(base * cells.t, axis=1)
    return out * dg


@dataclass(frozen=True)
class ELReport:
    nodes: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: float

    def to_csv(self, radii):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["node", "lhs", "rhs", "residual"])
        for i, a, b in zip(self.nodes, self.lhs, self.rhs):
            writer.writerow([repr(float(radii[i])), repr(float(a)), repr(float(b)), repr(float(a - b))])
        writer.writerow(["max", "", "", repr(float(self.residual))])
        return buf.getvalue()


def el_report(u, theta, spec, domain, p, n_test=16, radius=None, via_potential=False):
    w = working_profile(u, domain)
    idx = hat_centres(w, domain, n_test, radius)
    lhs = _lhs_all(w, domain, p)[idx]
    unit = (_rhs_unit_via_potential if via_potential else _rhs_unit)(w, spec, p)
    rhs = theta * unit[idx]
    scale = np.max(np.abs(lhs) + np.abs(rhs))
    res = 0.0 if scale == 0.0 else float(np.max(np.abs(lhs - rhs)) / scale)
    return ELReport(nodes=idx, lhs=lhs, rhs=rhs, residual=res)


def el_residual(u, theta, spec, domain, p, n_test=16, radius=None):
    """max_i |lhs_i - rhs_i| / max_i (|lhs_i| + |rhs_i|) over hat test functions; 0 when both vanish."""
    return el_report(u, theta, spec, domain, p, n_test, radius).residual


def theta_least_squares(u, spec, domain, p, n_test=16, radius=None):
    """theta minimising sum_i (lhs_i - theta b0(G(u), g(u) phi_i))^2 over the hat family."""
    w = working_profile(u, domain)
    idx = hat_centres(w, domain, n_test, radius)
    lhs = _lhs_all(w, domain, p)[idx]
    unit = _rhs_unit(w, spec, p)[idx]
    denom = float(unit @ unit)
    if denom == 0.0:
        raise DegenerateProfileError("all test functions see a vanishing right side")
    return float(lhs @ unit) / denom
