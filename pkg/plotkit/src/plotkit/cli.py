"""Command line front end: render --kind {map,curves,bench} --in ... --out ...

Exits nonzero with a one-line message on parse failures or missing files.
"""

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .formats import ParseError


def _limits(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("limits need the form LO,HI")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("bad limit value") from None
    return lo, hi


def build_parser():
    p = argparse.ArgumentParser(
        prog="render",
        description="Render planner dump files to a figure.")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="inputs", required=True, nargs="+",
                   metavar="FILE", help="input dump files")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--xlim", type=_limits, metavar="LO,HI")
    p.add_argument("--ylim", type=_limits, metavar="LO,HI")
    p.add_argument("--dpi", type=int, default=120)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                      out=args.out, xlim=args.xlim, ylim=args.ylim,
                      dpi=args.dpi)
    try:
        render(spec)
    except (ParseError, OSError) as e:
        print("render: %s" % e, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
