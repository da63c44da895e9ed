"""Schwarz symmetrization of radial profiles and the rearrangement inequalities.

The symmetric decreasing rearrangement is obtained by inverting the
distribution function mu(t) = |{v > t}| of the piecewise-linear interpolant:
v*(r) is the level t with mu(t) equal to the ball volume omega r^N / N.
mu is computed exactly cell by cell, so the only error left is the final
piecewise-linear reading of v* between nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernel import b_split_direct
from .radial import RadialProfile, grad_norm

_CHUNK = 256
_SOLVER_STEPS = 60


def _superlevel_measure(levels, a, b, va, vb, p, closed=False):
    """mu(t) = |{v > t}| for every t in ``levels``; |{v >= t}| when ``closed``.

    The two differ only on flat cells, where mu jumps.
    """
    out = np.empty(levels.size)
    h = b - a
    dv = vb - va
    flat = dv == 0.0
    safe_dv = np.where(flat, 1.0, dv)
    for lo in range(0, levels.size, _CHUNK):
        t = levels[lo:lo + _CHUNK, None]
        s = np.clip((t - va) / safe_dv, 0.0, 1.0)
        x = a + s * h
        # decreasing cell: {v > t} = [a, x]; increasing cell: [x, b]
        left = np.where(dv < 0, a, x)
        right = np.where(dv < 0, x, b)
        left = np.where(flat, a, left)
        right = np.where(flat, np.where((va >= t) if closed else (va > t), b, a), right)
        out[lo:lo + _CHUNK] = np.sum(right ** p.n - left ** p.n, axis=1)
    return p.omega * out / p.n


def _crossing_volume(t, a, h, va, dv, p):
    """omega x^N / N at the point x of a linear cell where v = t."""
    x = a + (t - va) / dv * h
    return p.omega * x ** p.n / p.n


def schwarz_symmetrize(v, p):
    """Nonincreasing profile on the grid of ``v``, equimeasurable with ``v``.

    The levels are bracketed between consecutive sorted node values; inside a
    bracket mu(t) differs from mu(bracket top) only through the cells whose
    range spans the bracket, so each node's root-find touches a few cells.
    """
    values = v.values
    if np.any(values < 0):
        raise DomainError("symmetrization needs a nonnegative profile")
    nodes = v.nodes
    a, b = nodes[:-1], nodes[1:]
    va, vb = values[:-1], values[1:]
    target = p.omega * nodes ** p.n / p.n

    levels = np.unique(np.concatenate(([0.0], values)))
    mu_levels = _superlevel_measure(levels, a, b, va, vb, p)
    # first level whose superlevel set fits inside the ball of volume target
    k = np.minimum(np.searchsorted(-mu_levels, -target, side="left"), levels.size - 1)
    out = levels[k].copy()
    todo = np.nonzero((k > 0) & (mu_levels[k] < target))[0]
    if todo.size == 0:
        return RadialProfile(v.grid, np.minimum.accumulate(out))

    # cells crossing bracket (levels[i], levels[i+1]) have i0 <= i < i1
    i0 = np.searchsorted(levels, np.minimum(va, vb))
    i1 = np.searchsorted(levels, np.maximum(va, vb))
    span = i1 - i0
    pair_cell = np.repeat(np.arange(a.size), span)
    pair_bracket = np.repeat(i0, span) + (np.arange(pair_cell.size) - np.repeat(np.cumsum(span) - span, span))
    order = np.argsort(pair_bracket, kind="stable")
    pair_cell, pair_bracket = pair_cell[order], pair_bracket[order]
    starts = np.searchsorted(pair_bracket, np.arange(levels.size))
    stops = np.searchsorted(pair_bracket, np.arange(levels.size), side="right")

    bracket = k[todo] - 1
    count = stops[bracket] - starts[bracket]
    owner = np.repeat(np.arange(todo.size), count)
    first = np.repeat(starts[bracket] - (np.cumsum(count) - count), count)
    cell = pair_cell[first + np.arange(owner.size)]

    ca, ch, cva = a[cell], (b - a)[cell], va[cell]
    cdv = (vb - va)[cell]
    sign = np.where(cdv < 0, 1.0, -1.0)  # decreasing cells grow with x, increasing shrink
    lo = levels[bracket]
    hi = levels[bracket + 1]
    # left limit at the bracket top: flat cells at that level are still full
    mu_top = _superlevel_measure(levels, a, b, va, vb, p, closed=True)[bracket + 1]
    base = mu_top - np.bincount(
        owner, sign * _crossing_volume(hi[owner], ca, ch, cva, cdv, p), minlength=todo.size)
    tgt = target[todo]
    for _ in range(_SOLVER_STEPS):
        mid = 0.5 * (lo + hi)
        mu = base + np.bincount(owner, sign * _crossing_volume(mid[owner], ca, ch, cva, cdv, p),
                                minlength=todo.size)
        above = mu > tgt
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out[todo] = hi
    return RadialProfile(v.grid, np.minimum.accumulate(out))


@dataclass(frozen=True)
class RieszReport:
    bplus_gap: float
    bminus_gap: float
    polya_gap: float

    def csv_row(self, seed):
        return ",".join([str(seed)] + [repr(float(x)) for x in
                                       (self.bplus_gap, self.bminus_gap, self.polya_gap)])

    @staticmethod
    def csv_header():
        return "seed,bplus_gap,bminus_gap,polya_gap"


def riesz_check(v, p, angular_nodes=2048):
    """Gaps b+(v*) - b+(v), b-(v) - b-(v*), |grad v| - |grad v*|; all >= 0 in theory."""
    vs = schwarz_symmetrize(v, p)
    before = b_split_direct(v, v, p, angular_nodes)
    after = b_split_direct(vs, vs, p, angular_nodes)
    return RieszReport(
        bplus_gap=after.b_plus - before.b_plus,
        bminus_gap=before.b_minus - after.b_minus,
        polya_gap=grad_norm(v, p) - grad_norm(vs, p),
    )


def random_profile(rng, grid, bumps=4):
    """Smooth nonnegative radial profile on [0, 1]: a few Gaussian bumps, zero at r = 1."""
    r = grid.nodes
    centers = rng.uniform(0.0, 1.0, bumps)
    widths = rng.uniform(0.05, 0.25, bumps)
    heights = rng.uniform(0.2, 1.0, bumps)
    vals = np.sum(heights[:, None] * np.exp(-((r[None, :] - centers[:, None]) / widths[:, None]) ** 2), axis=0)
    vals = vals * np.clip(1.0 - r, 0.0, None)
    return RadialProfile(grid, vals)


def random_step_profile(rng, grid, steps=8):
    """Nonnegative piecewise-constant profile with ``steps`` random levels on [0, 1)."""
    r = grid.nodes
    edges = np.linspace(0.0, 1.0, steps + 1)
    heights = rng.uniform(0.0, 1.0, steps)
    idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, steps - 1)
    vals = np.where(r < 1.0, heights[idx], 0.0)
    return RadialProfile(grid, vals)
