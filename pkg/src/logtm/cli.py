"""Command-line experiment runner; every subcommand writes one CSV table.

Exit codes: 0 success, 1 numerical failure (a check did not hold, no
convergence, saturation), 2 usage error.  Output files are written to a
temporary sibling and renamed, so a failed run leaves no partial CSV.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import growth
from .errors import DomainError, NumericalConsistencyError, SaturationError, UsageError
from .kernel import b_split_direct, reports_to_csv
from .maximize import MaximizeOptions, maximize, results_to_csv
from .moser import moser_table, phi_on_moser, rate_slope, threshold_exponent
from .radial import RadialGrid, dim_params
from .rearrange import RieszReport, random_profile, random_step_profile, riesz_check

KERNEL_TOL = 5e-3
GAP_TOL = 1e-4
EL_TOL = 1e-3
COMMANDS = ("dims", "verify-kernel", "rearrange-check", "moser", "sweep", "maximize", "el-check")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        vals = [int(float(x)) if "e" in x.lower() else int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    n_dim: tuple
    beta: tuple
    c: float
    grid: int
    n: tuple
    radius: float
    angular: int
    seed: int
    out: str | None
    domain: str
    profiles: int
    jobs: int
    max_iters: int


def _build_parser():
    parser = _Parser(prog="logtm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    defaults = {
        "dims": dict(profiles=0),
        "verify-kernel": dict(profiles=5),
        "rearrange-check": dict(profiles=20),
        "moser": dict(profiles=0),
        "sweep": dict(profiles=0),
        "maximize": dict(profiles=0),
        "el-check": dict(profiles=0),
    }
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--n-dim", type=_int_list, default=[2])
        sp.add_argument("--beta", type=_float_list, default=None)
        sp.add_argument("--c", type=float, default=1.0)
        sp.add_argument("--grid", type=int, default=512)
        sp.add_argument("--n", type=_int_list, default=None)
        sp.add_argument("--radius", type=float, default=32.0)
        sp.add_argument("--angular", type=int, default=2048)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        sp.add_argument("--domain", choices=("ball", "space"), default="ball")
        sp.add_argument("--profiles", type=int, default=defaults[name]["profiles"])
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--max-iters", type=int, default=MaximizeOptions.max_iters)
    return parser


def parse_args(argv):
    ns = _build_parser().parse_args(list(argv))
    if ns.command == "dims" and ns.n is not None:
        n_dim = ns.n
    else:
        n_dim = ns.n_dim
    for n in n_dim:
        if n < 2:
            raise UsageError(f"--n-dim must be >= 2, got {n}")
    if ns.command not in ("dims", "sweep") and len(n_dim) != 1:
        raise UsageError(f"{ns.command} takes a single --n-dim")
    if ns.grid < 3:
        raise UsageError(f"--grid must be >= 3, got {ns.grid}")
    if ns.angular < 16:
        raise UsageError(f"--angular must be >= 16, got {ns.angular}")
    if ns.radius < 1:
        raise UsageError(f"--radius must be >= 1, got {ns.radius}")
    if ns.c <= 0:
        raise UsageError(f"--c must be positive, got {ns.c}")
    if ns.jobs < 1 or ns.max_iters < 1 or ns.profiles < 0:
        raise UsageError("--jobs and --max-iters must be >= 1, --profiles >= 0")
    if ns.n is not None and ns.command != "dims" and min(ns.n) < 2:
        raise UsageError(f"--n entries must be >= 2, got {min(ns.n)}")
    if ns.beta is not None and ns.command not in ("sweep",) and len(ns.beta) != 1:
        raise UsageError(f"{ns.command} takes a single --beta")
    return RunConfig(
        command=ns.command, n_dim=tuple(n_dim), beta=tuple(ns.beta) if ns.beta else (),
        c=ns.c, grid=ns.grid, n=tuple(ns.n) if ns.n else (), radius=ns.radius,
        angular=ns.angular, seed=ns.seed, out=ns.out, domain=ns.domain,
        profiles=ns.profiles, jobs=ns.jobs, max_iters=ns.max_iters,
    )


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _spec_for(cfg, p, domain=None):
    domain = domain or cfg.domain
    beta = cfg.beta[0] if cfg.beta else (-1.5 if p.n == 2 else 1.5 * p.beta_star)
    if domain == "space":
        return growth.space_critical(beta, cfg.c, p)
    return growth.ball_critical(beta, cfg.c, p)


def _run_dims(cfg):
    rows = []
    for n in cfg.n_dim:
        p = dim_params(n)
        rows.append([n, p.omega, p.alpha_n, p.c_n])
    return _csv(["n", "omega", "alpha_n", "c_n"], rows), True


def _run_verify_kernel(cfg):
    p = dim_params(cfg.n_dim[0])
    grid = RadialGrid.uniform(1.0, cfg.grid)
    reports = []
    for k in range(cfg.profiles):
        v = random_step_profile(np.random.default_rng(cfg.seed + k), grid)
        reports.append(b_split_direct(v, v, p, cfg.angular))
    ok = all(r.gap <= KERNEL_TOL * max(1.0, abs(r.b0)) for r in reports)
    return reports_to_csv(reports), ok


def _run_rearrange(cfg):
    p = dim_params(cfg.n_dim[0])
    grid = RadialGrid.uniform(1.0, cfg.grid)
    lines = [RieszReport.csv_header()]
    ok = True
    for k in range(cfg.profiles):
        seed = cfg.seed + k
        rep = riesz_check(random_profile(np.random.default_rng(seed), grid), p, cfg.angular)
        ok &= min(rep.bplus_gap, rep.bminus_gap, rep.polya_gap) >= -GAP_TOL
        lines.append(rep.csv_row(seed))
    return "\n".join(lines) + "\n", ok


def _moser_rows(n_dim, beta, c, ns):
    p = dim_params(n_dim)
    spec = growth.ball_critical(beta, c, p)
    return [phi_on_moser(n, spec, p) for n in ns]


def _run_moser(cfg):
    p = dim_params(cfg.n_dim[0])
    beta = cfg.beta[0] if cfg.beta else p.beta_star + 0.25
    rows = _moser_rows(p.n, beta, cfg.c, cfg.n or (100, 1000, 10000))
    ok = all(r.phi >= r.lower_bound for r in rows)
    return moser_table(rows), ok


def _sweep_point(args):
    n_dim, beta, c, ns = args
    rows = _moser_rows(n_dim, beta, c, ns)
    return n_dim, beta, rows


def _run_sweep(cfg):
    ns = cfg.n or (1000, 10000, 100000, 1000000)
    points = []
    for n_dim in cfg.n_dim:
        p = dim_params(n_dim)
        betas = cfg.beta or (p.beta_star - 0.25, p.beta_star + 0.25)
        points += [(n_dim, b, cfg.c, tuple(ns)) for b in betas]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(pt) for pt in points]
    out = []
    for n_dim, beta, rows in sorted(results, key=lambda t: (t[0], t[1])):
        slope = rate_slope(rows) if len(rows) > 1 else float("nan")
        expo = threshold_exponent(n_dim, beta)
        for r in sorted(rows, key=lambda row: row.n):
            out.append([n_dim, beta, r.n, r.phi, r.lower_bound, r.grad_norm, expo, slope])
    header = ["n_dim", "beta", "n", "phi", "lower_bound", "grad_norm", "threshold_exponent", "slope"]
    return _csv(header, out), True


def _maximize(cfg):
    p = dim_params(cfg.n_dim[0])
    spec = _spec_for(cfg, p)
    opts = MaximizeOptions(grid_size=cfg.grid, seed=cfg.seed, radius=cfg.radius, max_iters=cfg.max_iters)
    return p, spec, maximize(spec, cfg.domain, p, opts)


def _run_maximize(cfg):
    p, spec, res = _maximize(cfg)
    text = results_to_csv([(cfg.domain, p.n, spec.beta, spec.c, res)])
    return text, res.converged


def _run_el_check(cfg):
    from .euler_lagrange import el_report

    p, spec, res = _maximize(cfg)
    rep = el_report(res.profile, res.theta, spec, cfg.domain, p, radius=res.profile.grid.radius)
    radii = res.profile.nodes if cfg.domain == "space" else res.profile.nodes[res.profile.nodes <= 1.0]
    return rep.to_csv(radii), res.converged and rep.residual <= EL_TOL


RUNNERS = {
    "dims": _run_dims,
    "verify-kernel": _run_verify_kernel,
    "rearrange-check": _run_rearrange,
    "moser": _run_moser,
    "sweep": _run_sweep,
    "maximize": _run_maximize,
    "el-check": _run_el_check,
}


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg):
    try:
        text, ok = RUNNERS[cfg.command](cfg)
    except (DomainError, UsageError) as exc:
        print(f"logtm: {exc}", file=sys.stderr)
        return 2
    except (SaturationError, NumericalConsistencyError, ArithmeticError) as exc:
        print(f"logtm: numerical failure: {exc}", file=sys.stderr)
        return 1
    _write(text, cfg.out)
    if not ok:
        print(f"logtm: {cfg.command}: check failed (table written)", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
