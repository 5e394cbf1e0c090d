"""Command-line front end.

Subcommands:
    consensus <scenario.json>   run a consensus scenario
    dispatch <scenario.json>    run a dispatch scenario
    gen-ieee118                 write the 118-bus dispatch scenario
    check <trace.csv> <scenario.json>
                                re-run deterministically, compare the
                                trace, and re-audit the envelopes

Exit codes: 0 success, 1 input error, 2 envelope violation or trace
mismatch reported by `check`.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .. import consensus_engine as ce
from .. import dispatch_engine as de
from ..errors import LagranetError, UnboundedBelow
from ..graph import spectral
from ..localprox import KIND_QUADRATIC_BOX
from ..metrics import compute_iteration_metrics, evaluate_envelopes
from ..oracle import solve_consensus_quadratic, solve_dispatch_bisection
from .ieee118 import gen_ieee118
from .records import emit_csv, emit_svg, parse_csv, records_from_metrics
from .scenario import (
    Scenario,
    load_scenario,
    resolve_dispatch,
    resolve_network,
    resolve_params,
    resolve_problems,
    save_scenario,
)

SVG_METRICS = ("objective_error", "feasibility", "consensus_residual",
               "w_seminorm", "delta_z_norm")


def _add_run_flags(parser):
    parser.add_argument("--iters", type=int, default=None)
    parser.add_argument("--rho", type=float, default=None)
    parser.add_argument("--eta", default=None,
                        help="positive float or 'auto'")
    parser.add_argument("--out-csv", default=None)
    parser.add_argument("--out-svg", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--quiet", action="store_true")


def _build_parser():
    parser = argparse.ArgumentParser(prog="lagranet")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in ("consensus", "dispatch"):
        cmd = sub.add_parser(kind, help=f"run a {kind} scenario")
        cmd.add_argument("scenario")
        _add_run_flags(cmd)

    gen = sub.add_parser("gen-ieee118", help="write the 118-bus scenario")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--coeffs", default=None,
                     help="JSON array of {a, b, c}; packaged default used if omitted")
    gen.add_argument("-o", "--output", required=True)
    gen.add_argument("--demand", type=float, default=950.0)
    gen.add_argument("--gen-count", type=int, default=14)
    gen.add_argument("--rho", type=float, default=1.0)
    gen.add_argument("--eta", default="auto")
    gen.add_argument("--iters", type=int, default=20000)
    gen.add_argument("--quiet", action="store_true")

    chk = sub.add_parser("check", help="re-verify a trace against its scenario")
    chk.add_argument("trace")
    chk.add_argument("scenario")
    chk.add_argument("--quiet", action="store_true")
    return parser


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if getattr(args, "iters", None) is not None:
        scenario.iters = args.iters
    if getattr(args, "rho", None) is not None:
        scenario.rho = args.rho
    if getattr(args, "eta", None) is not None:
        scenario.eta = args.eta if args.eta == "auto" else float(args.eta)
    if getattr(args, "out_csv", None) is not None:
        scenario.out_csv = args.out_csv
    if getattr(args, "out_svg", None) is not None:
        scenario.out_svg = args.out_svg
    seed = _resolve_seed(getattr(args, "seed", None))
    if seed is not None:
        scenario.seed = seed
    return scenario


def _resolve_seed(flag_seed):
    env = os.environ.get("LAGRANET_SEED")
    if env is not None:
        return int(env)
    return flag_seed


def _default_y0(problems, net) -> np.ndarray:
    """Feasible starting point: box projection of zero for each agent."""
    blocks = np.zeros((net.n, net.p))
    for i, prob in enumerate(problems):
        if prob.kind == KIND_QUADRATIC_BOX:
            blocks[i] = np.clip(blocks[i], prob.lo, prob.hi)
    return blocks.reshape(-1)


def _execute(scenario: Scenario):
    """Resolve, run, audit.  Returns (records, report, summary dict)."""
    net = resolve_network(scenario)
    spec = spectral(net)
    params = resolve_params(scenario, net, spec)

    if scenario.kind == "consensus":
        problems = resolve_problems(scenario, net)
        oracle = None
        if all(p.kind == KIND_QUADRATIC_BOX for p in problems):
            try:
                oracle = solve_consensus_quadratic(problems, net)
            except (UnboundedBelow, LagranetError):
                oracle = None
        y0 = (np.asarray(scenario.y0, dtype=float) if scenario.y0 is not None
              else _default_y0(problems, net))
        lam0 = (np.asarray(scenario.lambda0, dtype=float)
                if scenario.lambda0 is not None else None)
        trace = ce.run(net, problems, params, scenario.iters, y0=y0, lambda0=lam0)
    else:
        prob = resolve_dispatch(scenario, net)
        try:
            oracle = solve_dispatch_bisection(prob)
        except LagranetError:
            oracle = None
        y0 = (np.asarray(scenario.y0, dtype=float)
              if scenario.y0 is not None else None)
        lam0 = (np.asarray(scenario.lambda0, dtype=float)
                if scenario.lambda0 is not None else None)
        trace = de.run_dispatch(prob, params, scenario.iters, y0=y0, lambda0=lam0)

    report = evaluate_envelopes(trace, oracle, params, spec)
    rows = compute_iteration_metrics(trace, oracle, params, spec, report)
    records = records_from_metrics(rows)
    summary = {
        "kind": scenario.kind,
        "iters": scenario.iters,
        "eta": params.eta,
        "rho": params.rho,
        "oracle": oracle.method if oracle is not None else "none",
        "violations": report.violated(),
    }
    if rows:
        last = rows[-1]
        summary["final_consensus_residual"] = last.consensus_residual
        if last.feasibility is not None:
            summary["final_feasibility"] = last.feasibility
        if last.objective_error is not None:
            summary["final_objective_error"] = last.objective_error
    return records, report, summary


def _emit_outputs(scenario: Scenario, records, quiet: bool) -> None:
    if scenario.out_csv:
        emit_csv(records, scenario.out_csv)
        if not quiet:
            print(f"wrote {scenario.out_csv}")
    if scenario.out_svg:
        written = emit_svg(records, SVG_METRICS, scenario.out_svg)
        if not quiet:
            for path in written:
                print(f"wrote {path}")


def _print_summary(summary: dict, quiet: bool) -> None:
    if quiet:
        return
    for key, value in summary.items():
        print(f"{key}: {value}")


def _cmd_run(args, kind: str) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.kind != kind:
        raise LagranetError(
            f"scenario kind {scenario.kind!r} does not match subcommand {kind!r}"
        )
    scenario = _apply_overrides(scenario, args)
    records, report, summary = _execute(scenario)
    _emit_outputs(scenario, records, args.quiet)
    _print_summary(summary, args.quiet)
    return 0


def _cmd_gen(args) -> int:
    seed = _resolve_seed(args.seed)
    scenario = gen_ieee118(
        seed=seed, gen_count=args.gen_count, demand=args.demand,
        coeffs_path=args.coeffs, rho=args.rho,
        eta=args.eta if args.eta == "auto" else float(args.eta),
        iters=args.iters,
    )
    save_scenario(scenario, args.output)
    if not args.quiet:
        print(f"wrote {args.output}")
    return 0


def _cmd_check(args) -> int:
    """Re-run the scenario deterministically and compare every row.

    The envelope flags are part of the rows, so any tampering -- with a
    metric value or with a recorded pass flag -- shows up as a mismatch
    against the re-evaluated envelopes and fails the check.
    """
    recorded = parse_csv(args.trace)
    scenario = load_scenario(args.scenario)
    scenario.iters = max(len(recorded) - 1, 0)
    scenario.out_csv = None
    scenario.out_svg = None
    records, report, summary = _execute(scenario)

    if records != recorded:
        mismatch = next(
            (i for i, (a, b) in enumerate(zip(records, recorded)) if a != b),
            min(len(records), len(recorded)),
        )
        if not args.quiet:
            print(f"trace mismatch at row {mismatch}: "
                  "file does not match the deterministic re-run")
        return 2
    if not args.quiet:
        print(f"trace verified: {len(recorded)} rows match the deterministic re-run")
    return 0


def run_cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        if args.command == "consensus":
            return _cmd_run(args, "consensus")
        if args.command == "dispatch":
            return _cmd_run(args, "dispatch")
        if args.command == "gen-ieee118":
            return _cmd_gen(args)
        if args.command == "check":
            return _cmd_check(args)
        raise LagranetError(f"unknown command {args.command!r}")
    except (LagranetError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
