"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical precondition failure
(size cap, domain of an exponent), 3 a verification check did not pass.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import verify
from .divergences import StatePair, d_max, fidelity, renyi_new, renyi_old, umegaki
from .exponents import (
    ExponentContext,
    ExponentDomainError,
    converse_hoeffding,
    cutoff_rate,
    exponent_report,
    hoeffding,
    phi,
)
from .hypothesis_testing import (
    exponent_convergence,
    np_test,
    scaled_test,
    success_under_constraint,
    type2_optimal,
)
from .io import OperatorFormatError, convert_unit, load_operator, to_csv, to_json, write_text
from .operator_core import NotHermitianError, SizeCapError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def real_grid(text):
    """``x`` or ``start:end:step`` (end included when hit within rounding)."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number or start:end:step range: {text!r}")
    if len(vals) == 1:
        return vals
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"range must be start:end:step, got {text!r}")
    start, end, step = vals
    if step <= 0 or end < start:
        raise argparse.ArgumentTypeError(f"range {text!r} needs step > 0 and end >= start")
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    # integer multiples keep the grid free of accumulated rounding
    return [start + i * step for i in range(count)]


def int_list(text):
    """``k``, ``lo..hi`` or a comma list of those."""
    out = []
    for chunk in text.split(","):
        try:
            if ".." in chunk:
                lo, hi = chunk.split("..")
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(chunk))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected k, lo..hi or a comma list, got {text!r}")
    if any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("copy counts must be >= 1")
    return sorted(set(out))


def _common(p, pair_optional=False):
    need = not pair_optional
    extra = "" if need else " (default: shipped canonical qubit state)"
    p.add_argument("--rho", required=need, help="JSON operator file for rho" + extra)
    p.add_argument("--sigma", required=need, help="JSON operator file for sigma" + extra)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--unit", choices=("nats", "bits"), default="nats",
                   help="unit for entropies and rates (default: nats)")
    p.add_argument("--output", "-o", default="-", help="output file, '-' for stdout")


def build_parser():
    parser = _Parser(prog="renyi-qht", description="Sandwiched Renyi divergences and hypothesis-testing exponents.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("divergence", help="Renyi divergences over an alpha grid")
    _common(p)
    p.add_argument("--alpha", type=real_grid, help="alpha value or start:end:step grid")
    p.add_argument("--kind", choices=("new", "old", "both", "umegaki", "dmax", "fidelity"), default="both")

    p = sub.add_parser("exponents", help="exponent curves of a state pair")
    _common(p, pair_optional=True)
    p.add_argument("--quantity", choices=("converse-hoeffding", "hoeffding", "phi", "cutoff", "summary"),
                   default="converse-hoeffding")
    p.add_argument("--r-grid", type=real_grid, default=None, help="rates start:end:step")
    p.add_argument("--a-grid", type=real_grid, default=None, help="thresholds for --quantity phi")
    p.add_argument("--kappa", type=real_grid, default=[0.25, 0.5, 0.75], help="kappa grid for cutoff")

    p = sub.add_parser("simulate", help="exact finite-n tests on tensor powers")
    p.add_argument("mode", nargs="?", choices=("np", "constrained", "scaled", "convergence"),
                   default="convergence")
    _common(p, pair_optional=True)
    p.add_argument("--n", type=int_list, default=list(range(1, 11)), help="copy counts, e.g. 1..10")
    p.add_argument("--a", type=float, help="threshold exponent a")
    p.add_argument("--r", type=float, help="type-II rate constraint r")
    p.add_argument("--eps", type=float, help="type-I error budget (constrained mode)")

    p = sub.add_parser("verify", help="run verification checks")
    p.add_argument("check", choices=verify.CHECK_NAMES + ("all",))
    p.add_argument("--rho", help="operator file for the pair checks")
    p.add_argument("--sigma", help="operator file for the pair checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None, help="override trial counts of the random checks")
    p.add_argument("--n", type=int_list, default=None, help="copy counts for the pair checks")
    p.add_argument("--output", "-o", default="-")
    return parser


def parse_args(argv):
    """Parse and validate; raises :class:`UsageError` naming the offending flag."""
    args = build_parser().parse_args(argv)
    if args.command == "divergence":
        if args.kind in ("new", "old", "both"):
            if args.alpha is None:
                raise UsageError("--alpha is required for --kind " + args.kind)
            for a in args.alpha:
                if a == 1.0:
                    raise UsageError("alpha=1: use --kind umegaki")
                if a <= 0:
                    raise UsageError(f"--alpha must be positive, got {a}")
    if args.command == "exponents":
        if args.quantity in ("converse-hoeffding", "hoeffding") and args.r_grid is None:
            raise UsageError(f"--r-grid is required for --quantity {args.quantity}")
        if args.quantity in ("converse-hoeffding", "hoeffding") and min(args.r_grid) < 0:
            raise UsageError("--r-grid must be non-negative")
        if args.quantity == "phi" and args.a_grid is None:
            raise UsageError("--a-grid is required for --quantity phi")
        if args.quantity == "cutoff" and not all(0 < k < 1 for k in args.kappa):
            raise UsageError("--kappa values must lie in (0, 1)")
    if args.command == "simulate":
        m = args.mode
        if m in ("np", "scaled", "convergence") and args.a is None:
            raise UsageError(f"--a is required for simulate {m}")
        if m == "scaled" and args.r is None:
            raise UsageError("--r is required for simulate scaled")
        if m == "constrained":
            if (args.r is None) == (args.eps is None):
                raise UsageError("simulate constrained needs exactly one of --r, --eps")
            if args.r is not None and args.r < 0:
                raise UsageError("--r must be non-negative")
            if args.eps is not None and not 0 <= args.eps <= 1:
                raise UsageError("--eps must lie in [0, 1]")
    if args.command in ("divergence", "exponents", "simulate", "verify"):
        if (args.rho is None) != (args.sigma is None):
            raise UsageError("--rho and --sigma must be given together")
        for flag in ("rho", "sigma"):
            path = getattr(args, flag)
            if path is not None and not os.path.isfile(path):
                raise UsageError(f"--{flag}: no such file {path!r}")
    if getattr(args, "trials", None) is not None and args.trials < 1:
        raise UsageError("--trials must be >= 1")
    return args


def _states(args):
    if args.rho is None:
        return verify.canonical_pair()
    return load_operator(args.rho), load_operator(args.sigma)


def _emit(args, header, rows, nat_columns=()):
    unit = getattr(args, "unit", "nats")
    idx = [header.index(c) for c in nat_columns]
    out = []
    for row in rows:
        row = list(row)
        for i in idx:
            row[i] = convert_unit(float(row[i]), unit)
        out.append(row)
    if args.format == "json":
        text = to_json({"columns": list(header), "rows": out, "unit": unit})
    else:
        text = to_csv(header, out)
    write_text(text, args.output, sys.stdout)


def _run_divergence(args):
    pair = StatePair(*_states(args))
    unit = args.unit
    if args.kind in ("umegaki", "dmax", "fidelity"):
        value = {"umegaki": umegaki, "dmax": d_max, "fidelity": fidelity}[args.kind](pair)
        nat = () if args.kind == "fidelity" else ("value",)
        _emit(args, ["quantity", "value", "unit"], [[args.kind, value, unit if nat else "1"]], nat)
        return EXIT_OK
    rows = []
    for a in sorted(args.alpha):
        old = renyi_old(pair, a) if args.kind in ("old", "both") else math.nan
        new = renyi_new(pair, a) if args.kind in ("new", "both") else math.nan
        rows.append([a, old, new, unit])
    _emit(args, ["alpha", "value_old", "value_new", "unit"], rows, ("value_old", "value_new"))
    return EXIT_OK


def _run_exponents(args):
    ctx = ExponentContext.from_states(*_states(args))
    q = args.quantity
    if q == "summary":
        header = ["d_umegaki", "d_max", "r_max"]
        _emit(args, header, [[ctx.d_umegaki, ctx.d_max_val, ctx.r_max]], header)
    elif q == "converse-hoeffding":
        rep = exponent_report(ctx, args.r_grid)
        rows = zip(rep.r, rep.hr_star, rep.a_r, rep.phi_a_r)
        header = ["r", "Hr_star", "a_r", "phi"]
        _emit(args, header, rows, header)
    elif q == "hoeffding":
        rows = [[r, hoeffding(ctx, r)] for r in sorted(args.r_grid)]
        _emit(args, ["r", "Hr"], rows, ("r", "Hr"))
    elif q == "phi":
        rows = [[a, phi(ctx, a)] for a in sorted(args.a_grid)]
        _emit(args, ["a", "phi"], rows, ("a", "phi"))
    else:
        rows = [[k, *cutoff_rate(ctx, k)] for k in sorted(args.kappa)]
        _emit(args, ["kappa", "cutoff_rate", "touching_rate"], rows, ("cutoff_rate", "touching_rate"))
    return EXIT_OK


def _run_simulate(args):
    ctx = ExponentContext.from_states(*_states(args))
    m = args.mode
    if m == "convergence":
        table = exponent_convergence(ctx, args.a, args.n)
        cols = list(table.columns)
        rows = [[rec[c] for c in cols] for rec in table.as_records()]
        _emit(args, cols, rows, [c for c in cols if c.startswith(("rate_", "limit_", "dev_"))])
        return EXIT_OK
    rows = []
    if m == "np":
        header = ["n", "a", "success", "alpha_err", "beta_err", "rate_success", "rate_type2"]
        for n in args.n:
            t = np_test(ctx, n, args.a)
            rows.append([n, args.a, t.success, t.alpha_err, t.beta_err, t.log_success_rate, t.log_type2_rate])
        nat = ("a", "rate_success", "rate_type2")
    elif m == "scaled":
        header = ["n", "r", "a", "prefactor", "success", "beta_err", "rate_success", "rate_type2"]
        for n in args.n:
            t = scaled_test(ctx, n, args.r, args.a)
            rows.append([n, args.r, args.a, t.weight, t.success, t.beta_err, t.log_success_rate, t.log_type2_rate])
        nat = ("r", "a", "rate_success", "rate_type2")
    elif args.r is not None:
        h = converse_hoeffding(ctx, args.r)
        header = ["n", "r", "success", "beta_err", "rate_success", "minus_Hr_star"]
        for n in args.n:
            s, t = success_under_constraint(ctx, n, args.r, with_operator=False)
            rows.append([n, args.r, s, t.beta_err, t.log_success_rate, -h])
        nat = ("r", "rate_success", "minus_Hr_star")
    else:
        header = ["n", "eps", "beta_star", "rate_type2", "minus_D"]
        for n in args.n:
            beta, _ = type2_optimal(ctx, n, args.eps)
            rate = math.log(beta) / n if beta > 0 else -math.inf
            rows.append([n, args.eps, beta, rate, -ctx.d_umegaki])
        nat = ("rate_type2", "minus_D")
    _emit(args, header, rows, nat)
    return EXIT_OK


def _run_verify(args):
    ctx = None if args.rho is None else ExponentContext.from_states(*_states(args))
    pair_kw = {} if args.n is None else {"n_list": args.n}
    if args.check == "all":
        reports = verify.run_all(seed=args.seed, ctx=ctx, trials=args.trials, **pair_kw)
    elif args.check in verify.PAIR_CHECKS:
        reports = [verify.PAIR_CHECKS[args.check](ctx, **pair_kw)]
    else:
        kw = {"seed": args.seed}
        if args.trials is not None:
            kw["trials"] = args.trials
        reports = [verify.RANDOM_CHECKS[args.check](**kw)]
    write_text(to_json([r.as_dict() for r in reports]), args.output, sys.stdout)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.check_name}: {status} (worst violation {r.worst_violation:.3e})", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


_RUNNERS = {
    "divergence": _run_divergence,
    "exponents": _run_exponents,
    "simulate": _run_simulate,
    "verify": _run_verify,
}


def execute(args):
    try:
        return _RUNNERS[args.command](args)
    except (OperatorFormatError, NotHermitianError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SizeCapError, ExponentDomainError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"renyi-qht: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return execute(args)


if __name__ == "__main__":
    sys.exit(main())
