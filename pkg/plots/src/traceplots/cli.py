"""Command line for trace figures: `traceplots render --kind ... --trace ... --out ...`."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, PlotError, PlotSpec, render
from .reader import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="traceplots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a trace CSV")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--trace", required=True, help="path to trace.csv")
    p.add_argument("--out", required=True, help="output image path (.png/.svg/...)")
    p.add_argument(
        "--times",
        help="comma-separated snapshot times in seconds (trajectory only)",
    )
    return parser


def _parse_times(raw: str | None) -> tuple[float, ...]:
    if not raw:
        return ()
    try:
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError:
        raise PlotError(f"--times expects numbers, got {raw!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec(
            kind=args.kind,
            trace_path=args.trace,
            out_path=args.out,
            snapshot_times=_parse_times(args.times),
        )
        render(spec)
    except (PlotError, SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
