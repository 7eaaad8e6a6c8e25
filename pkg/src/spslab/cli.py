"""Command-line interface.

Subcommands:
  solve    compute one ground state and write it as JSON
  sweep    run an eps sweep, write the CSV table and JSON companion
  verify   recheck the stored identities of a saved solution
  report   render figures and a text summary from a sweep CSV

Exit codes: 0 success, 1 usage or input error, 2 solver failure or
non-convergence, 3 verification or invariant failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .asymptotics import (eps_of_lambda, read_sweep_csv, save_sweep, sweep,
                          _companion_json_path)
from .functionals import ProblemParams
from .plots import plot_distance, plot_gap
from .radial import GridError
from .solver import (SolverConfig, SolverError, ground_state, load_solution,
                     save_solution, verify)

logger = logging.getLogger(__name__)

CONFIG_ENV = "SPS_LAB_CONFIG"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        sys.exit(1)


def _parse_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise ValueError("could not parse %r as a comma-separated list" % text)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--p", type=float, default=None,
                     help="nonlinearity exponent in (3,6)")
    sub.add_argument("--grid-n", type=int, default=None, dest="grid_n",
                     help="number of radial nodes")
    sub.add_argument("--rmax", type=float, default=None,
                     help="domain truncation radius")
    sub.add_argument("--stretch", type=float, default=None,
                     help="geometric grid stretch factor (1 = uniform)")
    sub.add_argument("--tol", type=float, default=None,
                     help="relative residual tolerance")
    sub.add_argument("--max-iters", type=int, default=None, dest="max_iters",
                     help="iteration budget for the solver")
    sub.add_argument("--config", default=None,
                     help="JSON config file; flags override its values "
                          "(default: $%s if set)" % CONFIG_ENV)


def _build_parser() -> _Parser:
    parser = _Parser(prog="spslab",
                     description="radial ground states of the "
                                 "Schrodinger-Poisson-Slater equation and "
                                 "their small-coupling asymptotics")
    parser.add_argument("--version", action="version",
                        version="spslab %s" % __version__)
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("solve", parents=[], help="compute one ground state")
    _add_common(s)
    s.add_argument("--eps", type=float, default=None,
                   help="mass coefficient of the rescaled equation")
    s.add_argument("--lambda", type=float, default=None, dest="lam",
                   help="Coulomb coupling of the original equation "
                        "(recorded alongside the equivalent eps)")
    s.add_argument("--out", default=None, help="output JSON path")

    s = subs.add_parser("sweep", help="sweep eps toward the zero-mass limit")
    _add_common(s)
    s.add_argument("--eps-list", default=None, dest="eps_list",
                   help="comma-separated eps values, strictly decreasing, "
                        "ending at 0")
    s.add_argument("--lambda-list", default=None, dest="lambda_list",
                   help="comma-separated positive couplings; mapped to eps "
                        "values with the limit row appended")
    s.add_argument("--jobs", type=int, default=None,
                   help="parallel row solves (disables continuation)")
    s.add_argument("--out", default=None, help="output CSV path")

    s = subs.add_parser("verify", help="recheck a saved solution")
    s.add_argument("path", help="solution JSON file")
    s.add_argument("--tol", type=float, default=None,
                   help="tolerance override (default: the stored one)")

    s = subs.add_parser("report", help="render figures from a sweep CSV")
    s.add_argument("path", help="sweep CSV file")
    s.add_argument("--svg", default=None,
                   help="directory for the SVG figures (default: next to "
                        "the CSV)")
    return parser


def _load_config_file(args) -> dict:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path, "r") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


_CONFIG_KEYS = ("p", "eps", "lambda", "eps_list", "lambda_list", "grid_n",
                "rmax", "stretch", "tol", "max_iters", "jobs", "out", "svg")


def _merge_config(args, cfg: dict) -> None:
    for key in _CONFIG_KEYS:
        dest = "lam" if key == "lambda" else key
        if not hasattr(args, dest):
            continue
        if getattr(args, dest) is None and key in cfg:
            val = cfg[key]
            if key in ("eps_list", "lambda_list") and isinstance(val, list):
                val = ",".join(repr(float(x)) for x in val)
            setattr(args, dest, val)


def _solver_config(args) -> SolverConfig:
    kw = {}
    if args.grid_n is not None:
        kw["n"] = int(args.grid_n)
    if args.rmax is not None:
        kw["r_max"] = float(args.rmax)
    if args.stretch is not None:
        kw["stretch"] = float(args.stretch)
    if args.tol is not None:
        kw["tol_residual"] = float(args.tol)
    if args.max_iters is not None:
        kw["max_iters"] = int(args.max_iters)
    return SolverConfig(**kw)


def _cmd_solve(args) -> int:
    if args.p is None:
        raise ValueError("solve requires --p")
    if (args.eps is None) == (args.lam is None):
        raise ValueError("solve requires exactly one of --eps or --lambda")
    if args.lam is not None:
        params = ProblemParams.from_lambda(p=float(args.p), lam=float(args.lam))
    else:
        params = ProblemParams(p=float(args.p), eps=float(args.eps))
    config = _solver_config(args)
    out = args.out or "solution.json"
    sol = ground_state(params, config)
    save_solution(sol, out)
    print("m = %.12g" % sol.m)
    for key in ("nehari", "pohozaev_identity", "ode_sup"):
        print("%s residual = %.3e" % (key, sol.residuals[key]))
    print("converged = %s" % ("yes" if sol.converged else "no"))
    print("wrote %s" % out)
    return 0 if sol.converged else 2


def _cmd_sweep(args) -> int:
    if args.p is None:
        raise ValueError("sweep requires --p")
    if (args.eps_list is None) == (args.lambda_list is None):
        raise ValueError("sweep requires exactly one of --eps-list or "
                         "--lambda-list")
    p = float(args.p)
    if args.eps_list is not None:
        eps_list = _parse_list(str(args.eps_list))
    else:
        lams = _parse_list(str(args.lambda_list))
        if any(x <= 0 for x in lams):
            raise ValueError("couplings in --lambda-list must be positive")
        eps_list = tuple(sorted((eps_of_lambda(x, p) for x in lams),
                                reverse=True)) + (0.0,)
    config = _solver_config(args)
    jobs = int(args.jobs) if args.jobs is not None else 1
    out = args.out or "sweep.csv"
    report = sweep(p, eps_list, config, jobs=jobs)
    csv_path, json_path = save_sweep(report, out)
    print("eps        m_eps           gap          eps*B        t_proj     e_dist")
    for r in report.rows:
        print("%-9.4g %-15.10g %-12.6g %-12.6g %-10.8g %-10.6g"
              % (r.eps, r.m_eps, r.gap, r.eps_times_B, r.t_proj, r.e_dist))
    print("m_inf = %.12g, gap slope = %.4f, eta = %.4g"
          % (report.m_inf, report.slope_gap_vs_eps, report.eta_empirical))
    bad = [k for k, v in report.flags.items() if not v]
    print("invariants: %s" % ("all ok" if not bad else "FAIL " + ",".join(bad)))
    print("wrote %s and %s" % (csv_path, json_path))
    if report.partial or not report.flags["all_converged"]:
        return 2
    if not report.passed:
        return 3
    return 0


def _cmd_verify(args) -> int:
    sol = load_solution(args.path)
    rep = verify(sol, tol=args.tol)
    for line in rep.lines():
        print(line)
    if not rep.passed:
        print("verification failed: stored identities violated")
        return 3
    print("verification passed")
    return 0


def _cmd_report(args) -> int:
    rows = read_sweep_csv(args.path)
    json_path = _companion_json_path(args.path)
    meta = {}
    if os.path.exists(json_path):
        with open(json_path, "r") as fh:
            meta = json.load(fh)
    out_dir = args.svg or (os.path.dirname(os.path.abspath(args.path)))
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.path))[0]
    gap_path = os.path.join(out_dir, stem + "_gap.svg")
    dist_path = os.path.join(out_dir, stem + "_distance.svg")
    plot_gap(rows, gap_path, slope=meta.get("slope_gap_vs_eps"))
    plot_distance(rows, dist_path)

    lines = ["sweep report: %s (spslab %s)"
             % (os.path.basename(args.path), __version__)]
    if meta:
        lines.append("limit energy m_inf = %.12g" % meta["m_inf"])
        lines.append("gap slope vs eps = %.4f" % meta["slope_gap_vs_eps"])
        lines.append("empirical coercivity floor = %.4g"
                     % meta["eta_empirical"])
        bad = [k for k, v in meta.get("flags", {}).items() if not v]
        lines.append("invariants: %s"
                     % ("all ok" if not bad else "FAIL " + ",".join(bad)))
    lines.append("rows (eps, m_eps, gap, eps*B, t_proj, e_dist, decay):")
    for r in rows:
        lines.append("  %.6g %.12g %.6g %.6g %.8g %.6g %.4g"
                     % (r["eps"], r["m_eps"], r["gap"], r["eps_times_B"],
                        r["t_proj"], r["e_dist"], r["decay_rate"]))
    lines.append("figures: %s, %s" % (gap_path, dist_path))
    text = "\n".join(lines) + "\n"
    summary_path = os.path.join(out_dir, stem + "_summary.txt")
    with open(summary_path, "w") as fh:
        fh.write(text)
    print(text, end="")
    print("wrote %s" % summary_path)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config_file(args)
        _merge_config(args, cfg)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "report":
            return _cmd_report(args)
        raise ValueError("unknown command %r" % args.command)
    except SolverError as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return 2
    except (ValueError, GridError, OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
