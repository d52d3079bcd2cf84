"""Command-line entry point: ``plots <kind> --in <csv> --summary <json>
--out <path>``."""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .render import KINDS, PlotJob, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render antnet experiment artifacts into figures.")
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("--in", dest="csv_path", required=True,
                        help="experiment CSV (versioned header)")
    parser.add_argument("--summary", dest="summary_path", default=None,
                        help="experiment JSON summary (source of fitted "
                             "values)")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image path; both .png and .svg are "
                             "written")
    parser.add_argument("--column", default=None,
                        help="data column to plot (kind-dependent default)")
    parser.add_argument("--title", default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    job = PlotJob(kind=args.kind, csv_path=args.csv_path,
                  out_path=args.out_path, summary_path=args.summary_path,
                  column=args.column, title=args.title)
    try:
        result = render(job)
    except (SchemaError, OSError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print("wrote " + " and ".join(result["outputs"]))
    if result["annotation"]:
        print(result["annotation"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
