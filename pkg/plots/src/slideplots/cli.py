"""`render` command: figures from simulation CSVs."""

from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, render_regexp, render_trace


def _parse_hline(text: str) -> tuple[float, str]:
    value, _, label = text.partition(":")
    return float(value), label or f"y = {value}"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slideregret-plots")
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render", help="render a figure from CSV files")
    render.add_argument("--kind", required=True, choices=("trace", "regexp"))
    render.add_argument("--in", dest="inputs", nargs="+", required=True)
    render.add_argument("--out", required=True)
    render.add_argument("--hline", action="append", default=[], type=_parse_hline,
                        metavar="VALUE:LABEL")
    render.add_argument("--gap", type=float, help="instance gap (trace kind)")
    render.add_argument("--optimal", type=int, default=0, help="optimal arm id (trace kind)")
    render.add_argument("--predicted", type=float, help="solid reference line (regexp kind)")
    render.add_argument("--delta", type=float, help="dotted reference line (regexp kind)")
    render.add_argument("--policy", help="restrict the regexp figure to one policy")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            inputs=tuple(args.inputs),
            kind=args.kind,
            output=args.out,
            hlines=tuple(args.hline),
        )
        if spec.kind == "trace":
            if args.gap is None:
                raise ValueError("trace figures need --gap")
            render_trace(list(spec.inputs), args.gap, spec.output, optimal_arm=args.optimal)
        else:
            if len(spec.inputs) != 1:
                raise ValueError("regexp figures take exactly one curve file")
            render_regexp(
                spec.inputs[0],
                args.predicted,
                args.delta,
                spec.output,
                hlines=spec.hlines,
                policy=args.policy,
            )
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
