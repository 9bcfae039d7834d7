"""Command line front end: plot --kind <sweep_kind> --in <csv...> --out <png>."""

import argparse
import sys

from .render import PlotDataError, PlotSpec, render


def run(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot", description="Render sweep CSV files as a line figure.")
    parser.add_argument("--kind", required=True,
                        choices=("mu", "pc_max", "pr_cap", "pc_cap"))
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        metavar="CSV")
    parser.add_argument("--out", required=True, metavar="PNG")
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec(csv_paths=tuple(args.inputs), kind=args.kind,
                        out_path=args.out)
        render(spec)
    except (PlotDataError, OSError, ValueError) as exc:
        print(f"plot: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
