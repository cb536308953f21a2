"""Command line: render comparison figures from trajectory CSVs.

    plot_corrpic --spec fig2_left.json [--out-dir DIR] [--format svg|png]

The spec is a small JSON file; see the package README for the schema.
Exit codes: 0 success, 2 bad spec or unreadable/ragged CSVs, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import render, save
from .spec import SpecError, load_spec

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_IO = 4


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plot_corrpic", description=__doc__)
    parser.add_argument("--spec", required=True, help="JSON plot specification")
    parser.add_argument("--out-dir", default=None, help="output directory (default: spec directory)")
    parser.add_argument("--format", choices=("svg", "png"), default=None,
                        help="override the output format implied by the spec")
    args = parser.parse_args(argv)

    spec_path = Path(args.spec)
    try:
        spec = load_spec(spec_path)
        fig = render(spec)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    out_dir = Path(args.out_dir) if args.out_dir else spec_path.parent
    try:
        target = save(fig, out_dir / spec.output, args.format)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {target}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
