"""``mindiag`` command line interface.

Subcommands: gen, approx, certify, sweep, oracle. Reports are JSON (or CSV
for sweep); ``--pretty`` adds a short human summary on stderr. Matrix and
diagonal indices on the command line are 1-based.

Exit codes: 0 success, 2 usage error, 3 input cannot be loaded, 4 solver hit
its iteration cap (report still written), 5 degenerate spectrum, 6 problem
too large for the oracle.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from mindiag import __version__
from mindiag._accel import backend_name
from mindiag.errors import DegenerateSpectrumError, FormatError, ParameterError, SizeError
from mindiag.operators import (
    VARIANTS,
    DiagVector,
    GammaFamilySpec,
    MatrixFile,
    as_array,
    build,
    build_C_a,
    build_R,
    build_Tr,
    build_TrPlusD,
    load_diag,
    load_matrix,
    save_matrix,
    tail_bound,
)
from mindiag.pipeline import approx_report, certify, dumps
from mindiag.solver import SolverOptions, oracle_grid, sweep_quotient_norm
from mindiag.spectral import CLUSTER_TOL

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_LOAD = 3
EXIT_ITER_CAP = 4
EXIT_DEGENERATE = 5
EXIT_SIZE = 6


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("MINDIAG_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MINDIAG_SEED must be an integer, got {raw!r}") from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {text}")
    return v


def _gamma(text: str) -> float:
    try:
        g = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (0 < abs(g) < 1):
        raise argparse.ArgumentTypeError(f"gamma must satisfy 0 < |gamma| < 1, got {text}")
    return g


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mindiag", description="Best diagonal approximation in the operator norm.")
    p.add_argument("--version", action="version", version=f"mindiag {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a gamma-family matrix")
    g.add_argument("--family", choices=["gamma"], default="gamma")
    g.add_argument("--gamma", type=_gamma, required=True)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--variant", choices=VARIANTS, default="T")
    g.add_argument("--r", type=_positive_float, default=None, help="scale for Tr, TrPlusD and R (default: computed)")
    g.add_argument("--a", type=float, default=None, help="base for C_a (default: gamma)")
    g.add_argument("--out", type=Path, default=None)

    a = sub.add_parser("approx", help="compute the distance to the diagonals")
    a.add_argument("--input", type=Path, required=True)
    a.add_argument("--tol", type=_positive_float, default=SolverOptions.tol)
    a.add_argument("--seed", type=int, default=None)
    a.add_argument("--max-iters", type=_positive_int, default=SolverOptions.max_iters)
    a.add_argument("--multistart", type=_positive_int, default=SolverOptions.multistart)
    a.add_argument("--cluster-tol", type=_positive_float, default=CLUSTER_TOL)
    a.add_argument("--out", type=Path, default=None)
    a.add_argument("--pretty", action="store_true")

    c = sub.add_parser("certify", help="decide minimality of C + Diag(D1)")
    c.add_argument("--input", type=Path, required=True)
    c.add_argument("--diag", type=Path, default=None)
    c.add_argument("--tol", type=_positive_float, default=1e-6)
    c.add_argument("--cluster-tol", type=_positive_float, default=CLUSTER_TOL)
    c.add_argument("--hull-tol", type=_positive_float, default=None)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out", type=Path, default=None)
    c.add_argument("--pretty", action="store_true")

    s = sub.add_parser("sweep", help="solve a family across sizes and emit CSV")
    s.add_argument("--family", choices=["gamma"], default="gamma")
    s.add_argument("--gamma", type=_gamma, required=True)
    s.add_argument("--variant", choices=("T", "T1", "Tr", "TrPlusD", "Q", "R"), default="Tr")
    s.add_argument("--n-list", type=_int_list, required=True)
    s.add_argument("--track-diag", type=_int_list, default=[])
    s.add_argument("--tol", type=_positive_float, default=SolverOptions.tol)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--jobs", type=_positive_int, default=1)
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--pretty", action="store_true")

    o = sub.add_parser("oracle", help="brute-force distance for n <= 4")
    o.add_argument("--input", type=Path, required=True)
    o.add_argument("--radius", type=_positive_float, default=None)
    o.add_argument("--levels", type=int, default=4)
    o.add_argument("--points", type=_positive_int, default=21)
    o.add_argument("--shrink", type=_positive_float, default=5.0)
    o.add_argument("--no-refine", action="store_true")
    return p


def _metadata(command: str, args: argparse.Namespace) -> dict:
    flags = {}
    for k, v in sorted(vars(args).items()):
        if k in ("command", "pretty"):
            continue
        flags[k] = str(v) if isinstance(v, Path) else v
    return {"command": command, "flags": flags, "version": __version__, "backend": backend_name()}


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path: Path) -> MatrixFile:
    return load_matrix(path)


# -- subcommands ----------------------------------------------------------------


def cmd_gen(args) -> int:
    try:
        spec = GammaFamilySpec(args.gamma, args.n, args.variant)
        if args.variant == "Tr":
            obj = build_Tr(spec, args.r)
        elif args.variant == "TrPlusD":
            obj = build_TrPlusD(spec, args.r)
        elif args.variant == "R":
            obj = build_R(spec, args.r)
        elif args.variant == "C_a":
            obj = build_C_a(spec, args.a)
        else:
            obj = build(spec)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    meta = _metadata("gen", args)
    if isinstance(obj, DiagVector):
        payload = {"n": obj.n, "d": [float(x) for x in obj.d], "metadata": meta}
        text = json.dumps(payload, indent=1) + "\n"
        _emit(text, args.out)
    elif args.out is None:
        a = np.asarray(as_array(obj), dtype=float)
        sys.stdout.write(json.dumps({"n": a.shape[0], "entries": a.tolist(), "metadata": meta}, indent=1) + "\n")
    else:
        save_matrix(args.out, MatrixFile.from_matrix(obj, **meta))
    bound = tail_bound(args.gamma, args.n)
    stream = sys.stderr if args.out is None else sys.stdout
    print(f"tail bound (squared column mass beyond n): {bound:.6e}", file=stream)
    return EXIT_OK


def cmd_approx(args) -> int:
    mf = _load(args.input)
    seed = _default_seed() if args.seed is None else args.seed
    args.seed = seed
    opts = SolverOptions(
        tol=args.tol, max_iters=args.max_iters, multistart=args.multistart, seed=seed, cluster_tol=args.cluster_tol
    )
    res, report = approx_report(mf.to_sym(), opts)
    report["metadata"] = _metadata("approx", args)
    _emit(dumps(report), args.out)
    if args.pretty:
        _say(f"n = {report['n']}  upper = {res.upper:.12g}  lower = {res.lower:.12g}  gap = {res.gap:.3g}  status = {res.status}")
    if res.status == "degenerate":
        return EXIT_DEGENERATE
    if res.status != "converged":
        return EXIT_ITER_CAP
    return EXIT_OK


def cmd_certify(args) -> int:
    mf = _load(args.input)
    d1 = None
    if args.diag is not None:
        d1 = load_diag(args.diag)
        if d1.n != mf.n:
            raise FormatError(f"{args.diag}: diagonal has length {d1.n}, matrix has size {mf.n}")
    seed = _default_seed() if args.seed is None else args.seed
    args.seed = seed
    rep = certify(
        mf.to_sym(),
        d1,
        tol=args.tol,
        cluster_tol=args.cluster_tol,
        hull_tol=args.hull_tol,
        solver_opts=SolverOptions(seed=seed, cluster_tol=args.cluster_tol),
    )
    report = rep.to_dict()
    report["metadata"] = _metadata("certify", args)
    _emit(dumps(report), args.out)
    if args.pretty:
        _say(
            f"verdict: {rep.verdict}  (norm attains quotient: {rep.statement1}, certificate: {rep.statement2}, "
            f"balanced + hull: {rep.statement3}; hull residual {rep.hull.residual:.3g})"
        )
    return EXIT_OK


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def cmd_sweep(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    args.seed = seed
    if args.variant in ("Tr", "TrPlusD", "R") and min(args.n_list) < 2:
        raise UsageError(f"variant {args.variant} needs n >= 2")
    spec = GammaFamilySpec(args.gamma, max(args.n_list), args.variant)
    opts = SolverOptions(tol=args.tol, seed=seed)
    rows = sweep_quotient_norm(spec, args.n_list, opts, track=tuple(args.track_diag), jobs=args.jobs)
    cols = ["n", "upper", "lower", "gap", "lambda_sum_residual"] + [f"d_{k}" for k in args.track_diag]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in cols])
    _emit(buf.getvalue(), args.out)
    if args.out is not None:
        summary = {"metadata": _metadata("sweep", args), "rows": len(rows), "status": [r["status"] for r in rows]}
        sys.stdout.write(dumps(summary))
    if args.pretty:
        for row in rows:
            _say(f"n = {row['n']:>5}  upper = {row['upper']:.12g}  gap = {row['gap']:.3g}  {row['status']}")
    if any(r["status"] == "degenerate" for r in rows):
        return EXIT_DEGENERATE
    if any(r["status"] != "converged" for r in rows):
        return EXIT_ITER_CAP
    return EXIT_OK


def cmd_oracle(args) -> int:
    mf = _load(args.input)
    if mf.n > 4:
        raise SizeError(f"oracle supports n <= 4, got n = {mf.n}")
    if args.levels < 0:
        raise UsageError("--levels must be non-negative")
    val = oracle_grid(
        mf.to_sym(),
        radius=args.radius,
        levels=args.levels,
        points=args.points,
        shrink=args.shrink,
        refine=not args.no_refine,
    )
    print(repr(val))
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "approx": cmd_approx,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _say(f"usage error: {exc}")
        return EXIT_USAGE
    except FormatError as exc:
        _say(f"cannot load input: {exc}")
        return EXIT_LOAD
    except ParameterError as exc:
        # a symmetric-matrix check that failed after loading
        _say(f"cannot load input: {exc}")
        return EXIT_LOAD
    except DegenerateSpectrumError as exc:
        _say(f"degenerate spectrum: {exc}")
        return EXIT_DEGENERATE
    except SizeError as exc:
        _say(f"size error: {exc}")
        return EXIT_SIZE


if __name__ == "__main__":
    sys.exit(main())
