"""Nonlinearities G with derivative g = G'.

Families
--------
ball_critical   G(s) = c (1+|s|)^beta exp(alpha_N |s|^(N/(N-1)))
space_critical  G(s) = c (1+|s|)^beta (exp(alpha_N |s|^(N/(N-1))) - 1)
subcritical     G(s) = c (exp(alpha |s|^(N/(N-1))) - 1),  alpha < alpha_N
tabulated       monotone cubic (PCHIP) through sample points (s_k, G_k)

space_critical is increasing on [0, inf) when |beta| <= N/(N-1): writing
x = alpha_N s^(N/(N-1)) and using 1 - exp(-x) <= x,

    G'(s) >= c (1+s)^beta x e^x [beta/(1+s) + N/((N-1) s)] > 0,

because (1+s)/s > 1.  ball_critical has G(0) = c > 0 and, for beta < 0, dips
on [0, s_mono) before increasing; ``s_mono`` is stored on the spec.  All
evaluation goes through log G so that overflow is detected, not returned as
inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, SaturationError, UsageError
from .radial import dim_params

LOG_MAX = math.log(np.finfo(float).max) - 1.0
FAMILIES = ("ball_critical", "space_critical", "subcritical", "tabulated")


@dataclass(frozen=True)
class GrowthSpec:
    family: str
    p: object
    beta: float = 0.0
    c: float = 1.0
    alpha: float | None = None
    points: tuple = field(default=(), repr=False)
    s_mono: float = 0.0

    @property
    def exponent(self):
        return self.alpha if self.alpha is not None else self.p.alpha_n

    @cached_property
    def _table(self):
        s, gv = np.array(self.points, dtype=float).T
        return PchipInterpolator(s, gv, extrapolate=False)

    @cached_property
    def small_s_constant(self):
        """sup G(s)/s over s in (0, 1], sampled; used by the tail bound."""
        return small_s_constant(self, 1.0)

    def log_G(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        q = self.p.critical_power
        if self.family == "tabulated":
            with np.errstate(divide="ignore"):
                return np.log(self._eval_table(s)[0])
        x = self.exponent * s ** q
        out = math.log(self.c) + np.zeros_like(x)
        if self.family in ("ball_critical", "space_critical"):
            out = out + self.beta * np.log1p(s)
        if self.family == "ball_critical":
            return out + x
        with np.errstate(divide="ignore"):
            # log(e^x - 1), stable at both ends
            return out + np.where(x > 30.0, x + np.log1p(-np.exp(-np.minimum(x, 700.0))),
                                  np.log(np.expm1(np.minimum(x, 30.0))))

    def _eval_table(self, s):
        lo, hi = self.points[0][0], self.points[-1][0]
        if np.any(s > hi):
            bad = float(np.max(s))
            raise SaturationError(f"s={bad:g} beyond the tabulated range [{lo:g}, {hi:g}]", bad)
        return self._table(s), self._table.derivative()(s)

    def __call__(self, s):
        return growth_eval(self, s)


def _check_monotone(spec, s_from=0.0):
    s = np.concatenate(([s_from], np.geomspace(max(s_from, 1e-4), 40.0, 1000)))
    s = s[s >= s_from]
    logs = spec.log_G(s)
    if np.any(np.diff(logs) < -1e-12):
        k = int(np.argmin(np.diff(logs)))
        raise DomainError(f"{spec.family} is not nondecreasing near s={s[k]:g}")


def ball_critical(beta, c, p):
    if beta > 0 or c <= 0:
        raise DomainError(f"ball_critical needs beta <= 0 and c > 0 (got beta={beta}, c={c})")
    q = p.critical_power
    s_mono = 0.0
    if beta < 0:
        # d/ds log G = beta/(1+s) + alpha_N q s^(q-1) changes sign once
        s_mono = brentq(lambda s: beta / (1.0 + s) + p.alpha_n * q * s ** (q - 1.0), 0.0, 1e3)
    spec = GrowthSpec("ball_critical", p, beta=float(beta), c=float(c), s_mono=s_mono)
    _check_monotone(spec, s_mono)
    return spec


def space_critical(beta, c, p):
    if beta > 0 or c <= 0:
        raise DomainError(f"space_critical needs beta <= 0 and c > 0 (got beta={beta}, c={c})")
    if abs(beta) > p.critical_power:
        raise DomainError(f"space_critical needs |beta| <= N/(N-1) = {p.critical_power:g}")
    spec = GrowthSpec("space_critical", p, beta=float(beta), c=float(c))
    _check_monotone(spec)
    return spec


def subcritical(alpha, c, p):
    if not 0 < alpha < p.alpha_n or c <= 0:
        raise DomainError(f"subcritical needs 0 < alpha < alpha_N = {p.alpha_n:g} and c > 0")
    spec = GrowthSpec("subcritical", p, alpha=float(alpha), c=float(c))
    _check_monotone(spec)
    return spec


def tabulated(points, p):
    pts = tuple((float(s), float(v)) for s, v in points)
    s = np.array([a for a, _ in pts])
    gv = np.array([b for _, b in pts])
    if len(pts) < 2 or s[0] != 0.0 or np.any(np.diff(s) <= 0):
        raise DomainError("tabulated points need s_0 = 0 and strictly increasing s")
    if np.any(gv < 0) or np.any(np.diff(gv) < 0):
        raise DomainError("tabulated values must be nonnegative and nondecreasing")
    return GrowthSpec("tabulated", p, points=pts)


def growth_eval(spec, s):
    """(G(s), g(s)); G even, g odd, g(0) = 0.

    At s = 0 ball_critical with beta != 0 has one-sided slopes +-c*beta; the
    odd extension fixes g(0) = 0.
    """
    s_arr = np.asarray(s, dtype=float)
    a = np.abs(s_arr)
    sign = np.sign(s_arr)
    if spec.family == "tabulated":
        gv, dg = spec._eval_table(a)
        return _out(gv, s), _out(sign * dg, s)
    logg = spec.log_G(a)
    if np.any(logg > LOG_MAX):
        bad = float(np.max(np.where(logg > LOG_MAX, a, 0.0)))
        raise SaturationError(f"G({bad:g}) exceeds the floating-point range", bad)
    q = spec.p.critical_power
    alpha = spec.exponent
    gv = np.exp(logg)
    dphase = alpha * q * a ** (q - 1.0)
    if spec.family == "ball_critical":
        dg = gv * (spec.beta / (1.0 + a) + dphase)
    elif spec.family == "space_critical":
        log_pref = math.log(spec.c) + spec.beta * np.log1p(a) + alpha * a ** q
        dg = gv * spec.beta / (1.0 + a) + np.exp(log_pref) * dphase
    else:
        dg = spec.c * np.exp(alpha * a ** q) * dphase
    dg = np.where(a == 0.0, 0.0, dg)
    return _out(gv, s), _out(sign * dg, s)


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class GrowthClassReport:
    holds: bool
    witness_constant: float
    worst_s: float


def check_growth_class(spec, beta, kind, s_max=30.0, s0=1.0, samples=2000):
    """Sampled test of at-most / at-least beta-critical growth.

    at_most:  G(s) <= C e^{alpha_N s^(N/(N-1))} (1+s)^beta on [1e-3, s_max];
              reports the smallest admissible C.
    at_least: G(s) >= c' s^beta e^{alpha_N s^(N/(N-1))} for s in [s0, s_max];
              reports the largest admissible c'.
    The class is declared to hold when the extreme ratio is not still moving
    in the wrong direction over the last tenth of the sample.
    """
    p = spec.p
    q = p.critical_power
    if kind == "at_most":
        s = np.geomspace(1e-3, s_max, samples)
        log_ratio = spec.log_G(s) - p.alpha_n * s ** q - beta * np.log1p(s)
        k = int(np.argmax(log_ratio))
        cut = int(0.9 * samples)
        head = np.max(log_ratio[:cut])
        tail = np.max(log_ratio[cut:])
        holds = bool(tail <= head + 1e-9)
        return GrowthClassReport(holds, float(np.exp(log_ratio[k])), float(s[k]))
    if kind == "at_least":
        s = np.geomspace(s0, s_max, samples)
        log_ratio = spec.log_G(s) - p.alpha_n * s ** q - beta * np.log(s)
        k = int(np.argmin(log_ratio))
        cut = int(0.9 * samples)
        head = np.min(log_ratio[:cut])
        tail = np.min(log_ratio[cut:])
        holds = bool(np.isfinite(head) and tail >= head - 1e-9)
        return GrowthClassReport(holds, float(np.exp(log_ratio[k])), float(s[k]))
    raise UsageError(f"kind must be 'at_most' or 'at_least', got {kind!r}")


def at_least_constant(spec, beta, s0):
    """c' with G(s) >= c' s^beta e^{alpha_N s^(N/(N-1))} for s >= s0.

    Closed form for ball_critical: (1+s)^beta >= ((1+s0)/s0)^beta s^beta when
    beta <= 0, so c' = c ((1+s0)/s0)^beta.  Other families use the sampled
    minimum of :func:`check_growth_class`.
    """
    if spec.family == "ball_critical" and beta == spec.beta:
        return spec.c * ((1.0 + s0) / s0) ** beta
    return check_growth_class(spec, beta, "at_least", s0=s0).witness_constant


def tilde_g_space(beta, c, p, s):
    """(c/alpha_N) (1 + alpha_N |s|^(N/(N-1)))^(beta (N-1)/N) exp(alpha_N |s|^(N/(N-1))).

    Strictly increasing in |s| for -N/(N-1) < beta.
    """
    q = p.critical_power
    if not -q < beta < p.beta_star:
        raise DomainError(f"beta must lie in ({-q:g}, {p.beta_star:g}), got {beta}")
    x = p.alpha_n * np.abs(np.asarray(s, dtype=float)) ** q
    logv = math.log(c / p.alpha_n) + beta * (p.n - 1) / p.n * np.log1p(x) + x
    if np.any(logv > LOG_MAX):
        raise SaturationError("tilde G exceeds the floating-point range", float(np.max(s)))
    return _out(np.exp(logv), s)


def small_s_constant(spec, s_max):
    """max of G(s)/s over sampled s in (0, s_max]."""
    s = np.geomspace(s_max * 1e-8, s_max, 4000)
    gv, _ = growth_eval(spec, s)
    return float(np.max(gv / s))


def to_text(spec):
    lines = [f"family={spec.family}", f"n={spec.p.n}"]
    if spec.family in ("ball_critical", "space_critical"):
        lines += [f"beta={spec.beta!r}", f"c={spec.c!r}"]
    elif spec.family == "subcritical":
        lines += [f"alpha={spec.alpha!r}", f"c={spec.c!r}"]
    else:
        lines.append("points=" + ";".join(f"{s!r}:{v!r}" for s, v in spec.points))
    return "\n".join(lines) + "\n"


def from_text(text):
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {line!r}")
        fields[key.strip()] = value.strip()
    try:
        family = fields["family"]
        p = dim_params(int(fields["n"]))
    except KeyError as exc:
        raise UsageError(f"missing key {exc.args[0]!r}") from None
    if family == "ball_critical":
        return ball_critical(float(fields["beta"]), float(fields["c"]), p)
    if family == "space_critical":
        return space_critical(float(fields["beta"]), float(fields["c"]), p)
    if family == "subcritical":
        return subcritical(float(fields["alpha"]), float(fields["c"]), p)
    if family == "tabulated":
        pts = [tuple(map(float, item.split(":"))) for item in fields["points"].split(";")]
        return tabulated(pts, p)
    raise UsageError(f"unknown family {family!r}; expected one of {FAMILIES}")
