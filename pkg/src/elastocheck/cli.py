"""Command-line driver: ``elastocheck counterexample | falsify | schwarz | buckling``.

Exit codes: 0 claim reproduced, 1 claim contradicted, 2 usage error,
3 precondition window empty.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import time

import numpy as np

from . import convexity, report
from .energy import EnergyModel, ModelKind
from .schwarz import (
    Bar1DProblem,
    ElasticaProblem,
    buckling_experiment,
    convergence_rate_fit,
    critical_load_estimate,
    make_subdomains,
    monolithic_solve,
    schwarz_solve,
)

EXIT_OK, EXIT_CONTRADICTED, EXIT_USAGE, EXIT_WINDOW = 0, 1, 2, 3

# (model, test) -> expected outcome: "violation" or "clean"
EXPECTATIONS = {
    ("neo-hookean-eq3", "convexity"): "violation",
    ("neo-hookean-eq3", "rank-one"): "clean",
    ("neo-hookean-eq3", "polyconvexity-witness"): "clean",
    ("convex-quadratic", "convexity"): "clean",
    ("convex-quadratic", "rank-one"): "clean",
    ("convex-quadratic", "polyconvexity-witness"): "clean",
    ("svk", "convexity"): "violation",
    ("svk", "rank-one"): "violation",
}


class UsageError(Exception):
    pass


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _samples(text: str) -> int:
    v = float(text)
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"samples must be a positive integer: {text!r}")
    return int(v)


def parse_grid(text: str) -> list:
    """``start:stop:step`` with an inclusive stop, values rounded to 12 decimals."""
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty or ill-formed grid {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9))
    grid = [round(start + i * step, 12) for i in range(n + 1)]
    if grid[0] <= 0 or grid[-1] >= 1:
        raise argparse.ArgumentTypeError("grid must lie inside (0, 1)")
    return grid


def _write(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_counterexample(args) -> tuple:
    rep = convexity.reflection_counterexample(args.kappa, args.mu, args.lambda_grid, exclude_half=True)
    ok = rep.reproduced
    notes = [f"lambda={v} excluded: J(F_lambda)=0 at 1/2" for v in rep.excluded]
    result = dict(rep.to_dict(), notes=notes)
    summary = f"{result['n_violated']} of {len(rep.points)} grid points violate convexity"
    params = {"kappa": args.kappa, "mu": args.mu, "lambda_grid": args.lambda_grid}
    return (EXIT_OK if ok else EXIT_CONTRADICTED), summary, params, None, result


def cmd_falsify(args) -> tuple:
    key = (args.model, args.test)
    if key not in EXPECTATIONS:
        raise UsageError(f"no expectation defined for model {args.model!r} with test {args.test!r}")
    expected = EXPECTATIONS[key]
    model = EnergyModel.from_name(args.model, args.kappa, args.mu)
    result = {"model": args.model, "test": args.test, "samples": args.samples, "expected": expected,
              "certificate": None, "witness": None}
    if args.test == "convexity":
        cert = convexity.falsify_convexity(model, args.seed, args.samples)
    elif args.test == "rank-one":
        biased = model.kind is ModelKind.SVK
        result["compression_biased"] = biased
        cert = convexity.falsify_rank_one(model, args.seed, args.samples, compression_biased=biased)
    elif model.kind is ModelKind.CONVEX_QUADRATIC:
        # W is convex in F itself: the trivial lift is the identity
        cert = convexity.falsify_convexity(model, args.seed, args.samples)
    else:
        cert = None
        w = convexity.polyconvexity_witness(args.kappa, args.mu, args.seed, args.samples)
        result["witness"] = w.to_dict()
    if cert is not None:
        result["certificate"] = cert.to_dict()
        result["certificate_rechecked"] = cert.recheck()
    found = "violation" if (cert is not None or (result["witness"] and not result["witness"]["clean"])) else "clean"
    result["found"] = found
    ok = found == expected
    summary = f"{args.model}/{args.test}: expected {expected}, found {found}"
    params = {"model": args.model, "test": args.test, "samples": args.samples, "kappa": args.kappa, "mu": args.mu}
    return (EXIT_OK if ok else EXIT_CONTRADICTED), summary, params, args.seed, result


def cmd_schwarz(args) -> tuple:
    if args.problem != "bar1d":
        raise UsageError(f"unknown problem {args.problem!r}")
    model = EnergyModel.from_name(args.model, args.kappa, args.mu)
    p = Bar1DProblem(args.elements, args.length, 1.0, model, 0.0, args.stretch * args.length)
    try:
        subs = make_subdomains(p.n_nodes, args.subdomains, args.overlap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mono = monolithic_solve(p)
    x, trace = schwarz_solve(p, subs, p.initial_state(), args.tol, args.max_sweeps, reference=mono.x)
    max_err = float(np.max(np.abs(x - mono.x)))
    try:
        rho, r2 = convergence_rate_fit(trace)
    except ValueError:
        rho = r2 = None
    ok = mono.converged and trace.converged and max_err <= 10 * args.tol and (rho is None or rho < 1)
    result = {
        "trace": trace.to_dict(),
        "rho": rho,
        "r_squared": r2,
        "max_error": max_err,
        "monolithic_energy": mono.energy,
        "subdomain_ranges": [list(r) for r in subs.ranges],
    }
    if args.csv:
        _write(report.trace_to_csv(trace), args.csv)
    rate = "n/a" if rho is None else f"{rho:.4g}"
    summary = f"{trace.n_sweeps} sweeps, max error {max_err:.3g}, rho {rate}"
    params = {k: getattr(args, k) for k in ("problem", "model", "kappa", "mu", "elements", "length",
                                            "stretch", "subdomains", "overlap", "tol", "max_sweeps")}
    return (EXIT_OK if ok else EXIT_CONTRADICTED), summary, params, None, result


def cmd_buckling(args) -> tuple:
    base = ElasticaProblem(args.nodes, args.length, args.k_s, args.k_b, 0.0)
    try:
        subs = make_subdomains(args.nodes, args.subdomains, args.overlap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    d_crit = critical_load_estimate(base)
    rep = buckling_experiment(args.length, args.compression * d_crit, subs, args.seed, args.nodes,
                              args.k_s, args.k_b, critical_shortening=d_crit)
    if not rep.window_ok:
        code, summary = EXIT_WINDOW, rep.reason
    elif rep.status == "reproduced":
        code, summary = EXIT_OK, "two mirror buckled minima; Schwarz from straight stays straight at higher energy"
    else:
        failed = [k for k, v in rep.verdict.items() if not v]
        code, summary = EXIT_CONTRADICTED, "discrepancy not exhibited: " + ", ".join(failed)
    params = {k: getattr(args, k) for k in ("length", "nodes", "compression", "subdomains", "overlap", "k_s", "k_b")}
    return code, summary, params, args.seed, rep.to_dict()


COMMANDS = {
    "counterexample": cmd_counterexample,
    "falsify": cmd_falsify,
    "schwarz": cmd_schwarz,
    "buckling": cmd_buckling,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elastocheck", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = {}

    def common(p):
        p.add_argument("--out", default=None, help="JSON report path (default: stdout)")
        p.add_argument("--config", default=None, help="key = value file supplying defaults")

    p = sub.add_parser("counterexample", help="reflection counterexample to convexity")
    p.add_argument("--kappa", type=_positive, default=4.0)
    p.add_argument("--mu", type=_positive, default=2.0)
    p.add_argument("--lambda-grid", type=parse_grid, default="0.05:0.95:0.05")
    common(p)
    parser.commands[p.prog.split()[-1]] = p

    p = sub.add_parser("falsify", help="seeded search for convexity violations")
    p.add_argument("--model", choices=[k.value for k in ModelKind], required=True)
    p.add_argument("--test", choices=["convexity", "rank-one", "polyconvexity-witness"], required=True)
    p.add_argument("--samples", type=_samples, default=100000)
    p.add_argument("--seed", type=_nonneg_int, default=42)
    p.add_argument("--kappa", type=_positive, default=4.0)
    p.add_argument("--mu", type=_positive, default=2.0)
    common(p)
    parser.commands[p.prog.split()[-1]] = p

    p = sub.add_parser("schwarz", help="Schwarz alternating solve of the stretched bar")
    p.add_argument("--problem", choices=["bar1d"], default="bar1d")
    p.add_argument("--model", choices=[k.value for k in ModelKind], default="neo-hookean-eq3")
    p.add_argument("--kappa", type=_positive, default=4.0)
    p.add_argument("--mu", type=_positive, default=2.0)
    p.add_argument("--elements", type=int, default=40)
    p.add_argument("--length", type=_positive, default=1.0)
    p.add_argument("--subdomains", type=int, default=2)
    p.add_argument("--overlap", type=float, default=0.2)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.add_argument("--stretch", type=float, default=0.1)
    p.add_argument("--max-sweeps", type=int, default=500)
    p.add_argument("--csv", default=None, help="also write the trace table here")
    common(p)
    parser.commands[p.prog.split()[-1]] = p

    p = sub.add_parser("buckling", help="monolithic versus Schwarz on a compressed rod")
    p.add_argument("--length", type=_positive, default=1.0)
    p.add_argument("--nodes", type=int, default=64)
    p.add_argument("--compression", type=_positive, default=1.5, help="multiple of the critical end shortening")
    p.add_argument("--subdomains", type=int, default=2)
    p.add_argument("--overlap", type=float, default=0.2)
    p.add_argument("--k-s", type=_positive, default=1e4)
    p.add_argument("--k-b", type=_positive, default=1.0)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    common(p)
    parser.commands[p.prog.split()[-1]] = p
    return parser


def _apply_config(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    sub = parser.commands[args.command]
    try:
        values = report.read_config(args.config)
    except (OSError, configparser.Error) as exc:
        parser.error(f"cannot read config {args.config!r}: {exc}")
    known = {a.dest for a in sub._actions}
    unknown = set(values) - known
    if unknown:
        parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    start = time.perf_counter()
    try:
        code, summary, params, seed, result = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"elastocheck {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rep = report.make_report(args.command, params, seed, time.perf_counter() - start, code, summary, result)
    report.validate_report(rep)
    _write(report.dumps(rep), args.out)
    print(f"[{args.command}] exit {code}: {summary}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
