"""Command line interface.

Subcommands:
  powermin  -- fixed-target power minimization sweep over drops and antennas
  maxmin    -- weighted max-min SE sweep (joint vs. max-SNR association)
  validate  -- Monte-Carlo oracle vs. closed-form SINR cross-check
  drop      -- solve a single drop and print the full JSON result

Exit codes: 0 success, 2 when nothing was feasible (or validation failed in
a way that still produced output), 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .channel import load_scenario
from .harness import (
    DEFAULT_TARGET_SE,
    SweepSpec,
    default_scenario,
    emit_results,
    run_drop,
    run_sweep,
    validate_closed_form,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", metavar="FILE", help="scenario JSON to use as the drop template")
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument(
        "--antennas", default=None, help="comma-separated antenna counts (default 50,100,150,200)"
    )
    p.add_argument("--out", metavar="DIR", help="output directory for results.csv + config.json")


def _parse_antennas(text: str | None) -> tuple:
    try:
        counts = tuple(int(tok) for tok in (text or "50,100,150,200").split(",") if tok.strip())
    except ValueError as e:
        raise SystemExit(f"error: bad --antennas list {text!r}") from e
    if not counts:
        raise SystemExit("error: --antennas must list at least one count")
    return counts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimopower", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("powermin", help="fixed-target power minimization sweep")
    _add_common(p)
    p.add_argument("--drops", type=int, default=200)
    p.add_argument("--target-se", type=float, default=DEFAULT_TARGET_SE, help="per-user SE target (bit/symbol)")
    p.add_argument("--users", type=int, default=20)

    p = sub.add_parser("maxmin", help="max-min SE sweep")
    _add_common(p)
    p.add_argument("--drops", type=int, default=200)
    p.add_argument("--delta", type=float, default=0.01, help="bisection accuracy (bit/symbol)")
    p.add_argument("--users", type=int, default=20)
    p.add_argument("--trace", action="store_true", help="also write per-iteration traces.jsonl")

    p = sub.add_parser("validate", help="Monte-Carlo oracle vs. closed form")
    p.add_argument("--scenarios", type=int, default=20)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=0.01, help="relative SINR tolerance")

    p = sub.add_parser("drop", help="solve one drop, print full JSON result")
    _add_common(p)
    p.add_argument("--mode", choices=("powermin", "maxmin"), default="powermin")
    p.add_argument("--target-se", type=float, default=DEFAULT_TARGET_SE)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--users", type=int, default=20)
    return parser


def _cmd_sweep(args, mode: str) -> int:
    spec = SweepSpec(
        antenna_counts=_parse_antennas(args.antennas),
        mode=mode,
        target_se=getattr(args, "target_se", DEFAULT_TARGET_SE),
        num_drops=args.drops,
        rng_seed=args.seed,
        scenario_path=args.scenario,
        num_users=args.users,
        delta=getattr(args, "delta", 0.01),
        collect_traces=bool(getattr(args, "trace", False)),
    )
    result = run_sweep(spec)
    if args.out:
        for path in emit_results(result, args.out):
            print(f"wrote {path}")
    else:
        print("num_antennas,metric,value")
        for m, name, value in result.table:
            print(f"{m},{name},{value!r}")
    if mode == "powermin" and not result.any_feasible:
        print("warning: every drop was infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_validate(args) -> int:
    records = validate_closed_form(args.scenarios, args.samples, args.seed, args.tol)
    worst = 0.0
    for rec in records:
        worst = max(worst, rec["rel_error"])
        print(
            "scenario {scenario:2d}: L={num_bs} K={num_users} M={num_antennas:3d} "
            "closed={closed_form_sinr:.6g} mc={monte_carlo_sinr:.6g} "
            "rel_err={rel_error:.3e} [{flag}]".format(
                flag="PASS" if rec["passed"] else "FAIL", **rec
            )
        )
    ok = all(r["passed"] for r in records)
    print(f"{'PASS' if ok else 'FAIL'}: {len(records)} scenarios, worst rel_err {worst:.3e} (tol {args.tol})")
    return EXIT_OK if ok else EXIT_ERROR


def _cmd_drop(args) -> int:
    if args.scenario:
        scenario = load_scenario(args.scenario)
        if args.antennas is not None:
            scenario = scenario.with_antennas(_parse_antennas(args.antennas)[0])
    else:
        scenario = default_scenario(
            _parse_antennas(args.antennas)[0], args.users, rng_seed=args.seed
        )
    record = run_drop(scenario, mode=args.mode, target_se=args.target_se, delta=args.delta)
    text = json.dumps(record, indent=2, sort_keys=True)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "drop.json")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {path}")
    else:
        print(text)
    if args.mode == "powermin" and record["optimal"]["status"] != "optimal":
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "powermin":
            return _cmd_sweep(args, "powermin")
        if args.command == "maxmin":
            return _cmd_sweep(args, "maxmin")
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "drop":
            return _cmd_drop(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
