"""``gradvar-render <figure-spec.json>``: one image per spec file.

Exit codes: 0 on success, 2 on an invalid spec or input schema, 3 on I/O
failures while writing the image.
"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, SpecError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="gradvar-render",
        description="Render a figure from experiment outputs as described by a JSON spec.",
    )
    parser.add_argument("spec", nargs="+", help="path(s) to figure-spec JSON files")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    for path in args.spec:
        try:
            spec = FigureSpec.from_json(path)
            out = render(spec)
        except (SpecError, FileNotFoundError) as exc:
            print(f"spec error: {exc}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 3
        if not args.quiet:
            print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
