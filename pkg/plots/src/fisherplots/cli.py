"""Command-line entry point: plot --kind <kind> --in <csv...> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .figures import FORMATS, KINDS, FigureSpec, render
from .schema import MissingFile, SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from simulator results CSVs.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS, help="figure kind")
    parser.add_argument(
        "--in",
        dest="inputs",
        required=True,
        nargs="+",
        metavar="CSV",
        help="one or more results.csv files (stepsize_comparison takes exactly one)",
    )
    parser.add_argument("--out", required=True, metavar="IMG", help="output image path")
    parser.add_argument(
        "--format",
        choices=FORMATS,
        default=None,
        help="image format (default: from the --out suffix)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind, inputs=tuple(args.inputs), out=args.out, format=args.format
        )
        meta = render(spec)
    except (MissingFile, SchemaError) as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 1
    for label, note in meta.get("annotations", {}).items():
        print(f"{label}: {note}")
    print(f"wrote {meta['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
