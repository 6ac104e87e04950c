"""plots render --kind <k> --in <csv> --out <png>"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render

__all__ = ["main"]


def _parse_range(raw):
    lo, _, hi = raw.partition(":")
    return float(lo), float(hi)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render tickgame CSV exports as figures."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a CSV export")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="csv_path", required=True, help="input CSV")
    p.add_argument("--out", dest="out_path", required=True, help="output PNG")
    p.add_argument("--xlim", type=_parse_range, default=None, metavar="LO:HI")
    p.add_argument("--ylim", type=_parse_range, default=None, metavar="LO:HI")
    args = parser.parse_args(argv)
    try:
        render(
            FigureSpec(
                kind=args.kind, csv_path=args.csv_path, out_path=args.out_path,
                xlim=args.xlim, ylim=args.ylim,
            )
        )
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
