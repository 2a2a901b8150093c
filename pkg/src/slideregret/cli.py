"""Command-line surface: simulate, predict, verify, analyze."""

from __future__ import annotations

import argparse
import json
import sys

from . import harness, verify
from .theory import prediction_record


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slideregret")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a bandit experiment and write CSV outputs")
    sim.add_argument("--config", required=True, help="flat key = value config file")
    sim.add_argument("--runs", type=int)
    sim.add_argument("--horizon", type=int)
    sim.add_argument("--seed", type=int, help="master seed")
    sim.add_argument("--workers", help="worker count or 'auto'")
    sim.add_argument("--out", help="output directory (overrides output_dir)")
    sim.add_argument("--T", type=int, dest="T", help="episode regret window")
    sim.add_argument("--W", type=int, dest="W", help="estimator pooling radius")
    sim.add_argument("--t-min", type=int, dest="t_min")
    sim.add_argument("--policies", help="comma-separated policy kinds")

    pred = sub.add_parser("predict", help="closed-form regret-of-exploration prediction")
    pred.add_argument("--policy", required=True)
    pred.add_argument("--mu1", type=float, required=True)
    pred.add_argument("--mu2", type=float, required=True)
    pred.add_argument("--T", type=int, required=True)
    pred.add_argument("--c", type=float, default=None, help="ucbv exploration constant")
    pred.add_argument(
        "--ref-t", type=float, default=1e4, help="evaluation round for t-dependent regimes (ucbv)"
    )

    sub.add_parser("verify", help="run the oracle cross-check suites")

    ana = sub.add_parser("analyze", help="windowed estimates vs predictions on simulate output")
    ana.add_argument("--in", dest="input_dir", required=True)
    ana.add_argument("--t", dest="t_eval", required=True, help="comma-separated rounds")
    return parser


def _cmd_simulate(args) -> int:
    overrides = {
        "runs": args.runs,
        "horizon": args.horizon,
        "master_seed": args.seed,
        "workers": args.workers,
        "output_dir": args.out,
        "T": args.T,
        "W": args.W,
        "t_min": args.t_min,
        "policies": args.policies,
    }
    try:
        config = harness.parse_config_file(args.config, overrides)
        out = harness.run_experiment(config)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def _cmd_predict(args) -> int:
    try:
        record = prediction_record(
            args.policy, args.mu1, args.mu2, args.T, c=args.c, reference_t=args.ref_t
        )
    except (ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(record))
    return 0


def _cmd_verify() -> int:
    results = verify.run_all_suites()
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name}: {status} ({res.checks} checks)")
        for failure in res.failures:
            print(f"  - {failure}")
    return 0 if all(res.passed for res in results) else 1


def _cmd_analyze(args) -> int:
    try:
        t_eval = [int(x) for x in args.t_eval.split(",") if x.strip()]
        report = harness.analyze_experiment(args.input_dir, t_eval)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for kind, summary in report["summaries"].items():
        print(
            f"{kind}: runs={summary['runs']} "
            f"max_window_regret mean={summary['max_window_regret_mean']:.6g} "
            f"max={summary['max_window_regret_max']:.6g} "
            f"N2 median={summary['n2_final_median']:.6g} "
            f"[q10={summary['n2_final_q10']:.6g}, q90={summary['n2_final_q90']:.6g}] "
            f"predicted={summary['predicted_regexp']:.6g}"
        )
        if summary["block_length_histogram"]:
            bins = ", ".join(f"{k}: {v}" for k, v in summary["block_length_histogram"].items())
            print(f"{kind}: suboptimal block lengths past t_min: {bins}")
    for row in report["rows"]:
        est = "empty" if row["estimate"] is None else format(row["estimate"], ".6g")
        ordering = row["ordering_ok"]
        ordering_str = "n/a" if ordering is None else ("ok" if ordering else "VIOLATED")
        print(
            f"{row['policy']} t={row['t']}: estimate={est} (n={row['n_samples']}) "
            f"predicted={row['predicted']:.6g} ordering={ordering_str}"
        )
    print(f"wrote {report['written']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "predict":
        return _cmd_predict(args)
    if args.command == "verify":
        return _cmd_verify()
    if args.command == "analyze":
        return _cmd_analyze(args)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
