"""figgen command line: render one figure id from a dataset directory."""

import argparse
import os
import sys

from . import __version__
from .io import EmptyDataset, MissingColumn
from .render import FIGURE_IDS, render

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figgen",
        description="Render figure panels from optokerr CSV/JSON datasets.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("figure_id", choices=FIGURE_IDS)
    parser.add_argument("--data", required=True,
                        help="directory holding the figure's CSV/JSON files")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--format", default="png", choices=("png", "pdf", "svg"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        fig = render(args.figure_id, args.data)
    except FileNotFoundError as exc:
        print(f"figgen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MissingColumn, EmptyDataset) as exc:
        print(f"figgen: {exc}", file=sys.stderr)
        return EXIT_DATA
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"fig{args.figure_id}.{args.format}")
    fig.savefig(path, dpi=args.dpi, bbox_inches="tight")
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
