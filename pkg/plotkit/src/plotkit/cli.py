"""Command-line entry point.

    plot --kind {trajectory,sumrate,sweep} --in results.csv --out fig.png

Exit codes follow the benchmark tool's convention: 0 success, 1 usage
error, 2 bad input file (missing, wrong schema, empty), 3 unexpected
runtime failure.
"""

import argparse
import sys

from .figures import KINDS, PlotSpec, render_to_file
from .tables import SchemaError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plot",
                description="Render a figure from a benchmark CSV file.")
    p.add_argument("--kind", required=True, choices=KINDS,
                   help="figure kind")
    p.add_argument("--in", dest="source", required=True, metavar="CSV",
                   help="input CSV path (results CSV for trajectory/sumrate, "
                        "sweep CSV for sweep)")
    p.add_argument("--out", required=True, metavar="IMG",
                   help="output image path; the extension picks the format "
                        "(.png default raster, .svg/.pdf vector)")
    p.add_argument("--label", action="append", default=[], metavar="NAME=TEXT",
                   help="override the display label of one algorithm "
                        "(repeatable)")
    p.add_argument("--xlabel", default=None)
    p.add_argument("--ylabel", default=None)
    p.add_argument("--title", default=None)
    p.add_argument("--dpi", type=int, default=150)
    return p


def _label_map(pairs):
    out = {}
    for item in pairs:
        name, sep, text = item.partition("=")
        if not sep or not name:
            raise ValueError(f"bad --label {item!r}; expected NAME=TEXT")
        out[name] = text
    return out


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code)

    try:
        labels = _label_map(args.label)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        spec = PlotSpec(source=args.source, out=args.out, kind=args.kind,
                        xlabel=args.xlabel, ylabel=args.ylabel,
                        title=args.title, labels=labels, dpi=args.dpi)
        render_to_file(spec)
    except (FileNotFoundError, SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # pragma: no cover - defensive
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
