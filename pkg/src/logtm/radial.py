"""Dimension constants, radial grids and piecewise-linear radial profiles.

Every function in the package is represented as a radial profile: nodal values
on a strictly increasing grid of radii, read as the continuous piecewise-linear
interpolant and as zero beyond the last node.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, UsageError

GAUSS_POINTS = 8


def _gamma_half_integer(n):
    """Gamma(n / 2) for a positive integer n, by exact recursion."""
    if n % 2 == 0:
        value, x = 1.0, 1.0
    else:
        value, x = math.sqrt(math.pi), 0.5
    while x < n / 2:
        value *= x
        x += 1.0
    return value


@dataclass(frozen=True)
class DimensionParams:
    """Constants of the N-dimensional problem.

    omega is the surface measure of the unit sphere in R^n, alpha_n the
    critical Trudinger-Moser exponent n * omega^(1/(n-1)), c_n the radial
    decay constant (n / omega)^(1/n).
    """

    n: int
    omega: float
    alpha_n: float
    c_n: float

    @property
    def beta_star(self):
        """The critical exponent -n / (2(n-1))."""
        return -self.n / (2.0 * (self.n - 1))

    @property
    def critical_power(self):
        """The exponent n / (n-1) of the Trudinger-Moser phase."""
        return self.n / (self.n - 1.0)


def dim_params(n):
    if isinstance(n, bool) or int(n) != n:
        raise DomainError(f"dimension must be an integer, got {n!r}")
    n = int(n)
    if n < 2:
        raise DomainError(f"dimension must be >= 2, got {n}")
    omega = 2.0 * math.pi ** (n / 2) / _gamma_half_integer(n)
    return DimensionParams(
        n=n,
        omega=omega,
        alpha_n=n * omega ** (1.0 / (n - 1)),
        c_n=(n / omega) ** (1.0 / n),
    )


class RadialGrid:
    """Strictly increasing radii r_0 < ... < r_M with r_0 >= 0 and M >= 2."""

    def __init__(self, nodes):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise UsageError("a radial grid needs at least 3 nodes")
        if not np.all(np.isfinite(nodes)) or nodes[0] < 0:
            raise DomainError("grid radii must be finite and nonnegative")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("grid radii must be strictly increasing")
        nodes.setflags(write=False)
        self._nodes = nodes

    @classmethod
    def geometric(cls, radius, size, r_min_ratio=1e-8, extra=()):
        """Node 0 plus ``size - 1`` log-spaced radii from radius*r_min_ratio to radius.

        ``extra`` radii inside (0, radius) are merged in (kinks of a profile
        that should sit on a node).
        """
        if size < 3:
            raise UsageError("grid size must be at least 3")
        inner = np.geomspace(radius * r_min_ratio, radius, size - 1)
        nodes = np.concatenate(([0.0], inner, np.asarray(extra, dtype=float)))
        nodes = np.unique(nodes)
        return cls(nodes)

    @classmethod
    def uniform(cls, radius, size):
        if size < 3:
            raise UsageError("grid size must be at least 3")
        return cls(np.linspace(0.0, radius, size))

    @property
    def nodes(self):
        return self._nodes

    @property
    def radius(self):
        return float(self._nodes[-1])

    @property
    def size(self):
        return self._nodes.size

    def __len__(self):
        return self._nodes.size

    def __eq__(self, other):
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return self is other or (
            self.size == other.size and bool(np.array_equal(self._nodes, other._nodes))
        )

    def __hash__(self):
        return hash(self._nodes.tobytes())

    def __repr__(self):
        return f"RadialGrid(size={self.size}, r0={self._nodes[0]:g}, R={self.radius:g})"

    @cached_property
    def widths(self):
        return np.diff(self._nodes)

    @cached_property
    def trapezoid_weights(self):
        """Composite trapezoid weights for integrals in dr."""
        h = self.widths
        w = np.zeros(self.size)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return w

    @cached_property
    def cells(self):
        return CellQuadrature(self._nodes, GAUSS_POINTS)

    def volume_coordinate(self, p):
        """Ball volume omega r^N / N at every node."""
        return p.omega * self._nodes ** p.n / p.n


class CellQuadrature:
    """Gauss-Legendre points inside every grid cell.

    Arrays have shape (cells, q): ``x`` the abscissae, ``w`` the weights in dr
    and ``t`` the local coordinate in (0, 1) used for linear interpolation.
    """

    def __init__(self, nodes, q):
        xi, wi = np.polynomial.legendre.leggauss(q)
        a = nodes[:-1, None]
        h = np.diff(nodes)[:, None]
        self.t = 0.5 * (xi[None, :] + 1.0) * np.ones_like(a)
        self.x = a + h * self.t
        self.w = 0.5 * h * wi[None, :]
        self.xi = 0.5 * (xi + 1.0)
        self.wi = 0.5 * wi
        self.left = nodes[:-1]
        self.right = nodes[1:]
        self.h = np.diff(nodes)

    def interpolate(self, values):
        """Values of the piecewise-linear interpolant at the Gauss points."""
        values = np.asarray(values, dtype=float)
        return values[:-1, None] * (1.0 - self.t) + values[1:, None] * self.t

    def partial_moment(self, va, vb, n, weight=None):
        """int_{r_k}^{x} rho^(n-1) w(rho) v(rho) drho at every Gauss point x of cell k.

        ``va``/``vb`` are the values of the linear function v at the left and
        right end of each cell; ``weight`` is an optional extra factor w(rho).
        Nested Gauss rule on [r_k, x], exact for polynomial integrands.
        """
        va = np.broadcast_to(np.asarray(va, dtype=float), self.left.shape)[:, None, None]
        vb = np.broadcast_to(np.asarray(vb, dtype=float), self.left.shape)[:, None, None]
        a = self.left[:, None, None]
        span = (self.x - self.left[:, None])[:, :, None]
        rho = a + span * self.xi[None, None, :]
        tloc = (rho - a) / self.h[:, None, None]
        integrand = rho ** (n - 1) * (va * (1.0 - tloc) + vb * tloc)
        if weight is not None:
            integrand = integrand * weight(rho)
        return np.sum(integrand * self.wi[None, None, :], axis=2) * span[:, :, 0]


class RadialProfile:
    """Nodal values u_0..u_M on a :class:`RadialGrid`."""

    def __init__(self, grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.size,):
            raise UsageError(
                f"profile has {values.size} values for a grid of {grid.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("profile values must be finite")
        values.setflags(write=False)
        self._grid = grid
        self._values = values

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, np.asarray(func(grid.nodes), dtype=float))

    @property
    def grid(self):
        return self._grid

    @property
    def values(self):
        return self._values

    @property
    def nodes(self):
        return self._grid.nodes

    def __len__(self):
        return self._values.size

    def __repr__(self):
        return f"RadialProfile({self._grid!r}, max={np.max(np.abs(self._values)):.6g})"

    def with_values(self, values):
        return RadialProfile(self._grid, values)

    def scaled(self, factor):
        return RadialProfile(self._grid, factor * self._values)

    def __call__(self, r):
        """Piecewise-linear evaluation; zero beyond the last node."""
        return np.interp(r, self._grid.nodes, self._values, right=0.0)

    def slopes(self):
        return np.diff(self._values) / self._grid.widths

    def is_nonincreasing(self, tol=1e-12):
        return bool(np.all(np.diff(self._values) <= tol))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "u"])
        for r, u in zip(self._grid.nodes, self._values):
            writer.writerow([format(r, ".17g"), format(u, ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if [h.strip() for h in header] != ["r", "u"]:
            raise UsageError(f"expected header 'r,u', got {header!r}")
        rows = [(float(r), float(u)) for r, u in reader]
        r, u = zip(*rows)
        return cls(RadialGrid(r), u)


def check_same_grid(*profiles):
    grid = profiles[0].grid
    for other in profiles[1:]:
        if other.grid != grid:
            raise UsageError("profiles live on different grids")
    return grid


def grad_norm(u, p):
    """(omega * int |u'|^N r^(N-1) dr)^(1/N), exact for piecewise-linear u."""
    nodes = u.grid.nodes
    shell = (nodes[1:] ** p.n - nodes[:-1] ** p.n) / p.n
    total = p.omega * np.sum(np.abs(u.slopes()) ** p.n * shell)
    return float(total ** (1.0 / p.n))


def lp_norm(u, p_exp, p):
    """(omega * int |u|^p_exp r^(N-1) dr)^(1/p_exp).

    Gauss-Legendre inside each cell, so the value is exact for integer
    exponents on profiles that do not change sign inside a cell.
    """
    if p_exp < 1:
        raise DomainError(f"Lebesgue exponent must be >= 1, got {p_exp}")
    cells = u.grid.cells
    uq = cells.interpolate(u.values)
    total = p.omega * np.sum(cells.w * cells.x ** (p.n - 1) * np.abs(uq) ** p_exp)
    return float(total ** (1.0 / p_exp))


def w1n_norm(u, p):
    return float((grad_norm(u, p) ** p.n + lp_norm(u, p.n, p) ** p.n) ** (1.0 / p.n))


def constraint_norm(u, norm_kind, p):
    if norm_kind == "gradient":
        return grad_norm(u, p)
    if norm_kind == "full":
        return w1n_norm(u, p)
    raise UsageError(f"unknown norm kind {norm_kind!r}")


def rescale_to_ball(u, norm_kind, p):
    """Radial retraction u / max(1, ||u||) onto the closed unit ball."""
    norm = constraint_norm(u, norm_kind, p)
    if norm <= 1.0:
        return u
    return u.scaled(1.0 / norm)
