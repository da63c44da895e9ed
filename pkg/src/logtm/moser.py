"""Moser sequences, the energy Phi along them and the blow-up lower bound.

m_n(r) = omega^(-1/N) ln(1/r) / (ln n)^(1/N)      on [1/n, 1]
       = omega^(-1/N) (ln n)^((N-1)/N)            on [0, 1/n]

On the plateau alpha_N m_n^(N/(N-1)) = N ln n exactly, so the exponential in
G is written as n^N in log space instead of being recomputed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SaturationError, UsageError
from .growth import LOG_MAX, at_least_constant
from .kernel import b0_radial
from .radial import RadialGrid, RadialProfile, grad_norm

PER_DECADE = 200
MIN_SPIKE_NODES = 8


@dataclass(frozen=True)
class MoserRow:
    n: int
    phi: float
    lower_bound: float
    grad_norm: float

    def csv_row(self):
        return f"{self.n},{self.phi!r},{self.lower_bound!r},{self.grad_norm!r}"

    @staticmethod
    def csv_header():
        return "n,phi,lower_bound,grad_norm"


def plateau_value(n, p):
    return p.omega ** (-1.0 / p.n) * math.log(n) ** ((p.n - 1.0) / p.n)


def moser_grid(n, per_decade=PER_DECADE):
    """Geometric grid on [0, 1] down to 1e-8 min(1, 1/n), with 1/n as a node."""
    r_min = 1e-8 * min(1.0, 1.0 / n)
    size = int(round(per_decade * math.log10(1.0 / r_min))) + 1
    return RadialGrid.geometric(1.0, size, r_min_ratio=r_min, extra=(1.0 / n,))


def moser_profile(n, p, grid):
    if n < 2:
        raise DomainError(f"Moser index must be >= 2, got {n}")
    r = grid.nodes
    spike = 1.0 / n
    inside = np.count_nonzero((r > 0) & (r < spike))
    if inside < MIN_SPIKE_NODES:
        raise UsageError(
            f"grid does not resolve the spike at r=1/{n}: need {MIN_SPIKE_NODES} nodes in (0, {spike:g}), "
            f"i.e. r_min <= {spike * 10 ** (-MIN_SPIKE_NODES / PER_DECADE):.3g} at {PER_DECADE} nodes/decade"
        )
    scale = p.omega ** (-1.0 / p.n) / math.log(n) ** (1.0 / p.n)
    with np.errstate(divide="ignore"):
        vals = scale * np.log(1.0 / np.maximum(r, spike))
    vals = np.where(r >= 1.0, 0.0, vals)
    return RadialProfile(grid, vals)


def _log_density(n, spec, p, profile):
    """log G(m_n) at every node, with the plateau done through e^{alpha m^q} = n^N."""
    logg = np.asarray(spec.log_G(profile.values), dtype=float)
    plateau = profile.nodes <= 1.0 / n
    s = plateau_value(n, p)
    exp_part = p.n * math.log(n)
    if spec.family == "ball_critical":
        logg[plateau] = math.log(spec.c) + spec.beta * math.log1p(s) + exp_part
    elif spec.family == "space_critical":
        logg[plateau] = math.log(spec.c) + spec.beta * math.log1p(s) + exp_part + math.log1p(-math.exp(-exp_part))
    if np.any(logg > LOG_MAX):
        j = int(np.argmax(logg))
        raise SaturationError(f"G(m_{n}) leaves the floating-point range at r={profile.nodes[j]:g}",
                              float(profile.nodes[j]))
    return logg


def threshold_exponent(n_dim, beta):
    """2 beta (N-1)/N + 1; zero exactly at beta = -N/(2(N-1))."""
    if n_dim < 2:
        raise DomainError(f"dimension must be >= 2, got {n_dim}")
    return 1.0 + 2.0 * beta * (n_dim - 1) / n_dim


def blowup_lower_bound(n, beta, c1, p, s0=1.0):
    """omega^2 c_2^2 (ln n)^(2 beta (N-1)/N + 1) / N^2 with c_2 = c1 omega^(-beta/N).

    Valid when G(s) >= c1 s^beta e^{alpha_N s^(N/(N-1))} holds at the plateau
    value of m_n, i.e. when the plateau is at least s0.
    """
    s = plateau_value(n, p)
    if s < s0 * (1.0 - 1e-12):
        raise DomainError(f"plateau value {s:g} of m_{n} is below s0={s0:g}; the bound does not apply")
    c2 = c1 * p.omega ** (-beta / p.n)
    return p.omega ** 2 * c2 ** 2 * math.log(n) ** threshold_exponent(p.n, beta) / p.n ** 2


def phi_on_moser(n, spec, p, grid=None):
    """Phi(m_n) = b0(1_{B_1} G(m_n)) with the analytic lower bound alongside.

    The at-least growth threshold is s0 = min(1, plateau): for small n the
    plateau in N = 2 is below 1, and the chain only needs the growth bound at
    the plateau value itself.
    """
    grid = grid if grid is not None else moser_grid(n)
    prof = moser_profile(n, p, grid)
    dens = RadialProfile(grid, np.exp(_log_density(n, spec, p, prof)))
    phi = b0_radial(dens, p)
    s0 = min(1.0, plateau_value(n, p))
    c1 = at_least_constant(spec, spec.beta, s0)
    bound = blowup_lower_bound(n, spec.beta, c1, p, s0=s0)
    return MoserRow(n=int(n), phi=phi, lower_bound=bound, grad_norm=grad_norm(prof, p))


def rate_slope(rows):
    """Least-squares slope of ln phi against ln ln n."""
    x = np.log(np.log([row.n for row in rows]))
    y = np.log([row.phi for row in rows])
    return float(np.polyfit(x, y, 1)[0])


def moser_table(rows):
    rows = sorted(rows, key=lambda row: row.n)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MoserRow.csv_header().split(","))
    for row in rows:
        writer.writerow(row.csv_row().split(","))
    return buf.getvalue()
