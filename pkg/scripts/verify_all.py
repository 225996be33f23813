#!/usr/bin/env python3
"""Run every verification suite for every family and print the worst line.

Usage:
    python3 scripts/verify_all.py [--N 4] [--t 0.4] [--t-star 1.0]

Exit status 1 if any check fails anywhere.
"""

import argparse
import sys
import time

from elliptic_dpp.root_systems import FAMILIES
from elliptic_dpp.verification import run_suites

MIN_N = {"D": 2}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--t", type=float, default=0.4)
    ap.add_argument("--t-star", type=float, default=1.0, dest="t_star")
    args = ap.parse_args()

    failed = 0
    t0 = time.time()
    for tag in FAMILIES:
        N = max(args.N, MIN_N.get(tag, 1))
        results = run_suites("all", (tag, N, 1.0), args.t, args.t_star)
        bad = [r for r in results if not r.passed]
        failed += len(bad)
        worst = max(results, key=lambda r: r.residual / r.tol)
        print(f"{tag:>3} N={N}: {len(results) - len(bad)}/{len(results)} pass, "
              f"tightest margin {worst.name} at {worst.residual:.2e} "
              f"(tol {worst.tol:.0e})")
        for r in bad:
            print("    " + r.line())
    print(f"\n{time.time() - t0:.1f}s total; {failed} failures")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
