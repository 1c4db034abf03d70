"""Reproduce the fig3 results from the bundled configs and check them."""
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

    bundle = cmd_reproduce("fig3", args.out, args.seed, args.jobs)
    for c in bundle.summary["checks"]:
        print(f"[fig3] {'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    print(f"[fig3] {bundle.summary['runtime_s']} s -> {bundle.out_dir}")
    return 0 if bundle.passed else 2


if __name__ == "__main__":
    sys.exit(main())
