"""Command line for figure regeneration from benchmark CSVs."""

import argparse
import sys

from .render import PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanest-plot",
        description="Render benchmark CSVs into error-vs-sweep figures.")
    parser.add_argument("--csv", nargs="+", required=True, help="input CSV files")
    parser.add_argument("--x", choices=("snr", "pilots", "antennas"),
                        default="snr", help="sweep axis label")
    parser.add_argument("--out", default="figure.svg",
                        help="output image (format from the suffix)")
    parser.add_argument("--title", default="")
    parser.add_argument("--linear-y", action="store_true",
                        help="disable the log-scale error axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(csv_paths=list(args.csv), x_label=args.x,
                    log_y=not args.linear_y, out_path=args.out, title=args.title)
    try:
        render(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
