"""plotkit command line: batch-render every figure kind from one trajectory."""

from __future__ import annotations

import argparse
import sys

from .figures import render_all


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit",
                                     description="render figures from a trajectory CSV")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render-all", help="render every figure kind")
    p.add_argument("trajectory")
    p.add_argument("out_dir")
    args = parser.parse_args(argv)
    try:
        paths = render_all(args.trajectory, args.out_dir)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
