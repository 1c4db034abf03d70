"""Reproduce the fig4 sweep (32 PSO runs plus the constant-r2 contrast).

Takes a while on one core; pass --jobs to spread the sweep over processes.
"""
from __future__ import annotations

import argparse
import sys

from tvcavity.experiments import cmd_reproduce


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    bundle = cmd_reproduce("fig4", args.out, args.seed, args.jobs)
    for c in bundle.summary["checks"]:
        print(f"[fig4] {'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    print(f"[fig4] {bundle.summary['runtime_s']} s -> {bundle.out_dir}")
    return 0 if bundle.passed else 2


if __name__ == "__main__":
    sys.exit(main())
