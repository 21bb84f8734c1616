"""Command-line front end.

Every subcommand writes CSV or JSON to stdout (or ``--output``); diagnostics
go to stderr. Exit codes: 0 success, 2 usage error, 3 solver error, with a
single ``Name: message`` line on stderr.

Examples
--------
    narrowfr dimer --inv-a 1 --rstar 1
    narrowfr trimer spectrum --inv-a 0 --rstar 1 --levels 3
    narrowfr trimer nk --level 0 --format json
    narrowfr collapse-probe --kmax-list 1e2 1e3 1e4
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .model import FewerLevelsFound, ResonanceParams, SolverError, format_float, validate_params
from .numerics import build_log_gauss_grid
from .threebody import (
    c6_from_amplitude,
    default_out_grid,
    energy_relation_residual_trimer,
    reconstruct_nk,
    solve_amplitude,
    solve_levels,
    spectrum_grid,
    thomas_collapse_probe,
)
from .twobody import dimer_observables, f0, f_eps

EXIT_USAGE = 2
EXIT_SOLVER = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse prints the full usage and exits 2 on its own; keep it to one line
    def error(self, message):
        raise UsageError(message)


def finite_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return x


def positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return n


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format_float(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, allow_nan=False, indent=2) + "\n"


def _params(args) -> ResonanceParams:
    return ResonanceParams(args.inv_a, args.rstar, getattr(args, "eps", 0.0))


def _plain(v):
    if v is None:
        return None
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _records(header, rows):
    return [dict(zip(header, map(_plain, row))) for row in rows]


def _table(args, header, rows) -> str:
    if args.format == "json":
        return _json(_records(header, rows))
    return _csv(header, rows)


# -- subcommands ---------------------------------------------------------------


def cmd_dimer(args) -> str:
    sol = dimer_observables(_params(args))
    if args.format == "csv":
        d = sol.to_dict()
        p = d.pop("params")
        header = ["inv_a", "r_star"] + list(d)
        return _csv(header, [[p["inv_a"], p["r_star"]] + list(d.values())])
    return _json(sol.to_dict())


def cmd_amplitude(args) -> str:
    p = _params(args)
    validate_params(p, "regularized" if p.epsilon > 0 else "twobody")
    if not 0 < args.k_min < args.k_max:
        raise UsageError("need 0 < --k-min < --k-max")
    ks = np.geomspace(args.k_min, args.k_max, args.n) if args.n > 1 else np.array([args.k_min])
    header = ["k", "re_f0", "im_f0"]
    if p.epsilon > 0:
        header += ["re_f_eps", "im_f_eps"]
    rows = []
    for k in ks:
        a = f0(float(k), p)
        row = [k, a.real, a.imag]
        if p.epsilon > 0:
            b = f_eps(float(k), p)
            row += [b.real, b.imag]
        rows.append(row)
    return _table(args, header, rows)


def _grid(args, p, n_levels):
    if args.k_min is None and args.k_max is None and args.n_points is None:
        return spectrum_grid(p, n_levels)
    base = spectrum_grid(p, n_levels, args.n_points)
    k_min = base.k_min if args.k_min is None else args.k_min
    k_max = base.k_max if args.k_max is None else args.k_max
    return build_log_gauss_grid(base.n_points, k_min, k_max)


def cmd_spectrum(args) -> str:
    p = _params(args)
    validate_params(p, "threebody")
    levels = solve_levels(p, _grid(args, p, args.levels), args.levels)
    return _table(args, ["index", "q", "energy"], [[l.index, l.q, l.energy] for l in levels])


def cmd_nk(args) -> str:
    p = _params(args)
    validate_params(p, "threebody")
    grid = _grid(args, p, args.level + 1)
    level = solve_levels(p, grid, args.level + 1)[args.level]
    sol = solve_amplitude(level, p, grid)
    out = default_out_grid(sol, args.n_out)
    window = None
    if args.fit_lo is not None or args.fit_hi is not None:
        if args.fit_lo is None or args.fit_hi is None:
            raise UsageError("--fit-lo and --fit-hi go together")
        window = (args.fit_lo, args.fit_hi)
    dist = reconstruct_nk(sol, out_grid=out, fit_window=window, n_terms=args.fit_terms)
    summary = {
        "index": level.index,
        "q": level.q,
        "energy": level.energy,
        "c4_fit": dist.c4_fit,
        "c6_fit": dist.c6_fit,
        "c6_spectator": c6_from_amplitude(sol),
        "c6_with_pair_cm": c6_from_amplitude(sol, include_pair_cm=True),
        "n_mol": sol.n_mol,
        "n_open": sol.n_open,
        "k_mol": sol.k_mol,
        "fit_window": list(dist.fit_window),
        "sum_rule_residual": dist.sum_rule_residual,
        "energy_residual": energy_relation_residual_trimer(sol, dist),
    }
    rows = list(zip(dist.k_samples, dist.values))
    if args.format == "json":
        summary["samples"] = _records(["k", "n_k"], rows)
        return _json(summary)
    return _csv(["k", "n_k"], rows) + "# " + json.dumps(summary, allow_nan=False) + "\n"


def cmd_scan(args) -> str:
    if args.steps < 2 and args.inv_a_from != args.inv_a_to:
        raise UsageError("--steps must be >= 2 for a non-empty range")
    values = np.linspace(args.inv_a_from, args.inv_a_to, args.steps)
    header = ["inv_a"] + [f"q{i}" for i in range(args.levels)]
    rows = []
    for inv_a in values:
        p = ResonanceParams(float(inv_a), args.rstar)
        validate_params(p, "threebody")
        try:
            levels = solve_levels(p, spectrum_grid(p, args.levels), args.levels)
        except FewerLevelsFound as exc:
            # levels merge into the atom-dimer threshold or vanish at 1/a < 0
            levels = list(exc.levels)
        qs = [l.q for l in levels] + [None] * (args.levels - len(levels))
        rows.append([inv_a] + qs)
    return _table(args, header, rows)


def cmd_collapse(args) -> str:
    rows = thomas_collapse_probe(_params(args), args.kmax_list, n_points=args.n_points)
    return _table(args, ["kmax", "q0_rstar0", "q0_rstar1"], rows)


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--inv-a", type=finite_float, default=0.0, help="inverse scattering length 1/a (default 0)")
    common.add_argument("--rstar", type=finite_float, default=1.0, help="resonance width parameter R* (default 1)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--output", "-o", default=None, help="write here instead of stdout")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--n-points", type=positive_int, default=None, help="STM grid size")
    grid.add_argument("--k-min", type=finite_float, default=None)
    grid.add_argument("--k-max", type=finite_float, default=None)

    parser = _Parser(prog="narrowfr", description="Few-body solver for bosons at a narrow Feshbach resonance.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("dimer", parents=[common], help="dimer observables (JSON)")
    s.set_defaults(func=cmd_dimer, default_format="json")

    s = sub.add_parser("amplitude", parents=[common], help="scattering amplitude on a log k grid")
    s.add_argument("--eps", type=finite_float, default=0.0, help="Gaussian cutoff range; > 0 adds f_eps columns")
    s.add_argument("--k-min", type=finite_float, default=0.01)
    s.add_argument("--k-max", type=finite_float, default=10.0)
    s.add_argument("--n", type=positive_int, default=50)
    s.set_defaults(func=cmd_amplitude, default_format="csv")

    trimer = sub.add_parser("trimer", help="three-body bound states")
    tsub = trimer.add_subparsers(dest="trimer_command", required=True, parser_class=_Parser)
    s = tsub.add_parser("spectrum", parents=[common, grid], help="deepest trimer levels")
    s.add_argument("--levels", type=positive_int, default=3)
    s.set_defaults(func=cmd_spectrum, default_format="csv")
    s = tsub.add_parser("nk", parents=[common, grid], help="momentum distribution of one level")
    s.add_argument("--level", type=int, default=0, help="0 = ground state")
    s.add_argument("--n-out", type=positive_int, default=256, help="number of output momenta")
    s.add_argument("--fit-lo", type=finite_float, default=None)
    s.add_argument("--fit-hi", type=finite_float, default=None)
    s.add_argument("--fit-terms", type=int, choices=(2, 3), default=3)
    s.set_defaults(func=cmd_nk, default_format="csv")

    s = sub.add_parser("scan", parents=[common], help="trimer q versus 1/a")
    s.add_argument("--inv-a-from", type=finite_float, required=True)
    s.add_argument("--inv-a-to", type=finite_float, required=True)
    s.add_argument("--steps", type=positive_int, default=11)
    s.add_argument("--levels", type=positive_int, default=2)
    s.set_defaults(func=cmd_scan, default_format="csv")

    s = sub.add_parser("collapse-probe", parents=[common], help="ground q versus cutoff, R* = 0 and R* > 0")
    s.add_argument("--kmax-list", type=finite_float, nargs="+", default=[1e2, 1e3, 1e4])
    s.add_argument("--n-points", type=positive_int, default=320)
    s.set_defaults(func=cmd_collapse, default_format="csv")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        if args.format is None:
            args.format = args.default_format
        if getattr(args, "level", 0) < 0:
            raise UsageError("--level must be >= 0")
        text = args.func(args)
    except UsageError as exc:
        print(f"UsageError: {exc}", file=stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"{exc.name}: {exc}", file=stderr)
        return EXIT_SOLVER

    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
