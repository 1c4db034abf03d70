"""Run the optimal-shaping scenario over several seeds and tabulate the spread."""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

from tvcavity.config import problem_from_config
from tvcavity.experiments import canonical_config
from tvcavity.shaper import optimize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="fig2_red", help="bundled config name")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = canonical_config(args.config)
    problem = problem_from_config(cfg)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "fidelity", "efficiency", "loss_dB", "tau_TR", "iterations"])
    for seed in args.seeds:
        pso = replace(cfg.pso, seed=seed)
        res = optimize(problem, pso, use_initializer=cfg.use_initializer, jobs=args.jobs)
        m = res.merit
        w.writerow([seed, f"{m.fidelity:.6f}", f"{m.efficiency:.4f}", f"{m.loss_db:.3f}",
                    f"{res.tau:.2f}", len(res.trace.best_costs) - 1])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
