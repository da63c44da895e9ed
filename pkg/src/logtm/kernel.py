"""Bilinear forms and potentials of the logarithmic kernel ln(1/|x-y|).

The reduced forms (:func:`b0_radial`, :func:`b0_cross`, the potentials) use
the Newton-type collapse of the kernel to ln(1/max(r, rho)) for radial
densities, so each is a one-dimensional integral evaluated with a fixed Gauss
rule inside every cell of the piecewise-linear interpolant.  That collapse is
exact only for N = 2, where ln|x| is harmonic; for N >= 3 the spherical mean
of ln(1/|x-y|) differs from ln(1/max(r, rho)) and the reduced forms are a
different quantity from the true double integral.

The split into ln+(1/|x-y|) and ln+|x-y| has no reduction at all;
:func:`b_split_direct` integrates over the angle between x and y directly and
is an independent check of the reduced formulas (and, in N >= 3, measures
how far they are from the kernel they stand for).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError, UsageError
from .radial import RadialProfile, check_same_grid, dim_params


@dataclass(frozen=True)
class BilinearReport:
    b_plus: float
    b_minus: float
    b0: float
    gap: float

    def csv_row(self):
        return ",".join(repr(float(x)) for x in (self.b_plus, self.b_minus, self.b0, self.gap))

    @staticmethod
    def csv_header():
        return "b_plus,b_minus,b0,gap"


def _require_nonnegative(v, what="density"):
    if np.any(v.values < 0):
        j = int(np.argmin(v.values))
        raise DomainError(f"{what} must be nonnegative (value {v.values[j]:g} at r={v.nodes[j]:g})")


def _log_inv(x):
    return -np.log(x)


def _moments(values, grid, n):
    """Inner masses M(r) = int_0^r rho^(n-1) v drho at nodes and Gauss points."""
    cells = grid.cells
    vq = cells.interpolate(values)
    cell_mass = np.sum(cells.w * cells.x ** (n - 1) * vq, axis=1)
    m_nodes = np.concatenate(([0.0], np.cumsum(cell_mass)))
    m_q = m_nodes[:-1, None] + cells.partial_moment(values[:-1], values[1:], n)
    return vq, m_nodes, m_q


def _outer_weights(grid, n):
    cells = grid.cells
    return cells.w * cells.x ** (n - 1) * _log_inv(cells.x)


def _cross(vv, wv, grid, p):
    vq, _, mv = _moments(vv, grid, p.n)
    wq, _, mw = _moments(wv, grid, p.n)
    c = _outer_weights(grid, p.n)
    return float(p.omega ** 2 * np.sum(c * (vq * mw + wq * mv)))


def b0_radial(v, p):
    """b0(v, v) = 2 omega^2 int r^(N-1) v ln(1/r) int_0^r rho^(N-1) v drho dr."""
    _require_nonnegative(v)
    vq, _, mv = _moments(v.values, v.grid, p.n)
    c = _outer_weights(v.grid, p.n)
    return float(2.0 * p.omega ** 2 * np.sum(c * vq * mv))


def b0_cross(v, w, p):
    """Symmetric bilinear form b0(v, w) of two radial densities on one grid.

    Written as omega^2 int r^(N-1) ln(1/r) [v(r) M_w(r) + w(r) M_v(r)] dr,
    which is the Newton form with the two orderings of (r, rho) separated, so
    the diagonal reproduces :func:`b0_radial` exactly.  Signed densities are
    accepted (test functions in the Euler-Lagrange identities change sign).
    """
    grid = check_same_grid(v, w)
    return _cross(v.values, w.values, grid, p)


def b0_gradient(values, grid, p):
    """Gradient of v -> b0(v, v) with respect to the nodal values of v.

    Component j equals 2 b0(v, phi_j) for the hat function phi_j; the sum over
    cells is arranged so that the whole vector costs one pass over the grid.
    """
    n = p.n
    cells = grid.cells
    values = np.asarray(values, dtype=float)
    vq, _, mv = _moments(values, grid, n)
    c = _outer_weights(grid, n)
    ncell = cells.h.size

    # hats times the inner mass of v
    a_left = np.sum(c * (1.0 - cells.t) * mv, axis=1)
    a_right = np.sum(c * cells.t * mv, axis=1)
    term_a = np.zeros(ncell + 1)
    term_a[:-1] += a_left
    term_a[1:] += a_right

    # v times the inner mass of the hats
    d = c * vq
    d_cell = np.sum(d, axis=1)
    tail = np.concatenate((np.cumsum(d_cell[::-1])[::-1], [0.0]))  # tail[k] = sum_{m>=k}
    p_half = np.sum(cells.w * cells.x ** (n - 1) * (1.0 - cells.t), axis=1)
    q_half = np.sum(cells.w * cells.x ** (n - 1) * cells.t, axis=1)
    left_mass = np.concatenate(([0.0], q_half))
    right_mass = np.concatenate((p_half, [0.0]))
    hat_mass = left_mass + right_mass
    term_b = hat_mass * np.concatenate((tail[1:], [0.0]))
    term_b[:-1] += left_mass[:-1] * d_cell
    pk = cells.partial_moment(1.0, 0.0, n)
    qk = cells.partial_moment(0.0, 1.0, n)
    term_b[:-1] += np.sum(d * pk, axis=1)
    term_b[1:] += np.sum(d * qk, axis=1)
    return 2.0 * p.omega ** 2 * (term_a + term_b)


def _outer_log_moments(values, grid, n):
    """T(r_j) = int_{r_j}^R rho^(n-1) ln(1/rho) v drho at every node."""
    cells = grid.cells
    vq = cells.interpolate(values)
    per_cell = np.sum(cells.w * cells.x ** (n - 1) * _log_inv(cells.x) * vq, axis=1)
    return np.concatenate((np.cumsum(per_cell[::-1])[::-1], [0.0]))


def potential_nodes(values, grid, p):
    """(ln(1/|.|) * v)(r_j) for a radial density given by nodal values."""
    _, m_nodes, _ = _moments(values, grid, p.n)
    t_nodes = _outer_log_moments(values, grid, p.n)
    r = grid.nodes
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(r > 0, _log_inv(np.where(r > 0, r, 1.0)) * m_nodes, 0.0)
    return p.omega * (inner + t_nodes)


def potential_log(v, p):
    """The logarithmic potential f = ln(1/|.|) * v at every node, as a profile.

    f(r) = -omega [ln r int_0^r rho^(N-1) v + int_r^inf rho^(N-1) ln(rho) v],
    with f(0) = omega int rho^(N-1) ln(1/rho) v.  No 1/gamma_N normalisation.
    """
    _require_nonnegative(v)
    return RadialProfile(v.grid, potential_nodes(v.values, v.grid, p))


def log_potential_at(v, p, r):
    """Evaluate ln(1/|.|) * v at arbitrary radii, including beyond the grid."""
    _require_nonnegative(v)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise DomainError("radii must be nonnegative")
    grid = v.grid
    nodes = grid.nodes
    vals = v.values
    n = p.n
    _, m_nodes, _ = _moments(vals, grid, n)
    t_nodes = _outer_log_moments(vals, grid, n)
    out = np.empty_like(r)
    xi, wi = np.polynomial.legendre.leggauss(16)
    xi = 0.5 * (xi + 1.0)
    wi = 0.5 * wi
    for i, x in enumerate(r):
        if x >= nodes[-1]:
            out[i] = p.omega * _log_inv(x) * m_nodes[-1]
            continue
        k = int(np.searchsorted(nodes, x, side="right") - 1)
        a, b = nodes[k], nodes[k + 1]
        slope = (vals[k + 1] - vals[k]) / (b - a)
        # inner part of the cell [a, x]
        rho = a + (x - a) * xi
        mass = m_nodes[k] + (x - a) * np.sum(wi * rho ** (n - 1) * (vals[k] + slope * (rho - a)))
        # outer part of the cell [x, b]
        rho = x + (b - x) * xi
        outer = t_nodes[k + 1] + (b - x) * np.sum(
            wi * rho ** (n - 1) * _log_inv(rho) * (vals[k] + slope * (rho - a))
        )
        inner = _log_inv(x) * mass if x > 0 else 0.0
        out[i] = p.omega * (inner + outer)
    return out


def star_norm(v, p):
    """|v|_* = omega int ln(1 + r) |v(r)| r^(N-1) dr."""
    cells = v.grid.cells
    vq = cells.interpolate(v.values)
    return float(p.omega * np.sum(cells.w * cells.x ** (p.n - 1) * np.log1p(cells.x) * np.abs(vq)))


def l1_norm(v, p):
    cells = v.grid.cells
    vq = cells.interpolate(v.values)
    return float(p.omega * np.sum(cells.w * cells.x ** (p.n - 1) * np.abs(vq)))


def l2_norm(v, p):
    cells = v.grid.cells
    vq = cells.interpolate(v.values)
    return float(np.sqrt(p.omega * np.sum(cells.w * cells.x ** (p.n - 1) * vq ** 2)))


def _sphere_measure_below(n):
    """Surface measure of the (n-2)-sphere; 2 for the two points of S^0."""
    if n == 2:
        return 2.0
    return dim_params(n - 1).omega


@lru_cache(maxsize=16)
def _split_kernels(grid, n, angular_nodes):
    """Angle-integrated truncated kernels K+-(r_i, r_j) times the radial weights.

    Returns matrices A+- with b+-(v, w) = v^T A+- w for nodal vectors.
    """
    p = dim_params(n)
    nodes = grid.nodes
    weight = grid.trapezoid_weights * nodes ** (n - 1)
    gam, gw = roots_legendre(angular_nodes)
    gam = 0.5 * np.pi * (gam + 1.0)
    gw = 0.5 * np.pi * gw * np.sin(gam) ** (n - 2)
    gam2, gw2 = roots_legendre(2 * angular_nodes)
    gam2 = 0.5 * np.pi * (gam2 + 1.0)
    gw2 = 0.5 * np.pi * gw2 * np.sin(gam2) ** (n - 2)
    cos_g = np.cos(gam)
    scale = p.omega * _sphere_measure_below(n)

    size = nodes.size
    k_plus = np.zeros((size, size))
    k_minus = np.zeros((size, size))
    active = np.nonzero(weight > 0)[0]
    rho = nodes[active]
    for i in active:
        ri = nodes[i]
        logd2 = (ri * ri + rho * rho)[:, None] - (2.0 * ri * rho)[:, None] * cos_g[None, :]
        np.maximum(logd2, 1e-300, out=logd2)
        np.log(logd2, out=logd2)
        signed = logd2 @ gw
        far = np.maximum(logd2, 0.0, out=logd2) @ gw
        k_minus[i, active] = 0.5 * far
        k_plus[i, active] = 0.5 * far - 0.5 * signed
    # diagonal pairs: the log singularity sits at the end of the angular range
    r = nodes[active][:, None]
    d2 = 2.0 * r * r * (1.0 - np.cos(gam2)[None, :])
    logd = 0.5 * np.log(np.maximum(d2, 1e-300))
    k_plus[active, active] = np.maximum(-logd, 0.0) @ gw2
    k_minus[active, active] = np.maximum(logd, 0.0) @ gw2

    wmat = scale * weight[:, None] * weight[None, :]
    a_plus = wmat * k_plus
    a_minus = wmat * k_minus
    a_plus.setflags(write=False)
    a_minus.setflags(write=False)
    return a_plus, a_minus


def b_split_direct(v, w, p, angular_nodes=2048):
    """b+ and b- by direct quadrature over (r, rho, angle).

    Trapezoid rule in both radii, Gauss-Legendre in the angle with the weight
    sin^(N-2) folded in; pairs r = rho use twice the angular resolution.  The
    reduced form :func:`b0_cross` fills ``b0`` and ``gap``.
    """
    if angular_nodes < 16:
        raise UsageError(f"angular_nodes must be >= 16, got {angular_nodes}")
    grid = check_same_grid(v, w)
    _require_nonnegative(v)
    _require_nonnegative(w)
    a_plus, a_minus = _split_kernels(grid, p.n, int(angular_nodes))
    bp = float(v.values @ a_plus @ w.values)
    bm = float(v.values @ a_minus @ w.values)
    b0 = b0_cross(v, w, p)
    return BilinearReport(b_plus=bp, b_minus=bm, b0=b0, gap=abs(b0 - (bp - bm)))


def reports_to_csv(reports):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BilinearReport.csv_header().split(","))
    for rep in reports:
        writer.writerow([repr(float(x)) for x in (rep.b_plus, rep.b_minus, rep.b0, rep.gap)])
    return buf.getvalue()
