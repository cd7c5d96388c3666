"""maxslice-plot: render figures from a maxslice run directory."""

from __future__ import annotations

import argparse
import sys

from .artifacts import ArtifactError
from .render import KINDS, render


def main(argv=None):
    p = argparse.ArgumentParser(
        prog="maxslice-plot",
        description="figures from a maxslice run directory (reads its "
                    "manifest and CSV tables; recomputes nothing)")
    p.add_argument("run_dir")
    p.add_argument("--kinds", default=",".join(KINDS),
                   help=f"comma list from {{{','.join(KINDS)}}}")
    p.add_argument("--out", default=None, help="output directory (default: run_dir)")
    args = p.parse_args(argv)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    try:
        written, skipped = render(args.run_dir, kinds, args.out)
    except ArtifactError as exc:
        print(f"maxslice-plot: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    for kind, reason in skipped:
        print(f"maxslice-plot: skipped {kind}: {reason}", file=sys.stderr)
    return 0 if written else 1


if __name__ == "__main__":
    sys.exit(main())
