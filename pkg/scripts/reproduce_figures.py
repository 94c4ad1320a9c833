#!/usr/bin/env python3
"""Reproduce all four shipped figure presets into results/.

Equivalent to running `redtail figure N` for N in 1..4.  Each preset declares
its own scale and seed (1e8-3e8 jobs split over 10 replications; one to three
minutes per figure on one core); pass --jobs to downscale for a quick look,
e.g. --jobs 1000000.
"""

import argparse
import sys
import time

from redtail import expcli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--jobs", type=int, help="override total jobs per scenario")
    parser.add_argument("--seed", type=int, help="override the preset seed")
    parser.add_argument("--workers", type=int, help="process-parallel replications")
    parser.add_argument("--out", help="output root (default results/)", default=None)
    parser.add_argument("figures", nargs="*", type=int, default=list(expcli.FIGURE_NUMBERS),
                        help="figure numbers to run (default: all four)")
    args = parser.parse_args()

    failures = 0
    for number in args.figures:
        argv = ["figure", str(number)]
        for flag in ("jobs", "seed", "workers"):
            value = getattr(args, flag)
            if value is not None:
                argv += [f"--{flag}", str(value)]
        if args.out is not None:
            argv += ["--out", f"{args.out}/figure{number}"]
        print(f"=== figure {number} ===")
        start = time.monotonic()
        rc = expcli.main(argv)
        print(f"    ({time.monotonic() - start:.0f}s)")
        failures += rc != 0
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
