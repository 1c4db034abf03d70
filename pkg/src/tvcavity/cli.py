"""Command line entry point: ``tvcavity {simulate,optimize,bound,reproduce}``.

Exit codes: 0 success, 1 invalid input (config, arguments, infeasible
window), 2 a reproduce run finished but failed an acceptance check.
``TVCAVITY_OUT`` overrides the output directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .experiments import FIGURES, cmd_bound, cmd_optimize, cmd_reproduce, cmd_simulate
from .shaper import InfeasibleTargetError, InfeasibleWindowError

ENV_OUT = "TVCAVITY_OUT"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; 2 is reserved for failed acceptance checks."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _jobs(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("jobs must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tvcavity", description=(
        "Time-varying Fabry-Perot cavity: pulse shaping and spectral compression."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, type=Path, help="YAML experiment file")
        sp.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
        sp.add_argument("--seed", type=_seed, help="PSO seed, overrides the config")

    common(sub.add_parser("simulate", help="fixed r2 profile: envelopes, PSDs, merits"))
    sp = sub.add_parser("optimize", help="PSO shaping of r2(t), single run or sweep")
    common(sp)
    sp.add_argument("--jobs", type=_jobs, default=1, help="parallel workers")
    common(sub.add_parser("bound", help="attenuation loss bound tables"))
    sp = sub.add_parser("reproduce", help="run bundled configs and check tolerances")
    sp.add_argument("--figure", required=True, choices=FIGURES)
    common(sp, config=False)
    sp.add_argument("--jobs", type=_jobs, default=1, help="parallel workers")
    return p


def _out_dir(args, default: str) -> Path:
    env = os.environ.get(ENV_OUT)
    if env:
        return Path(env)
    return args.out if args.out is not None else Path(default)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            bundle = cmd_reproduce(args.figure, _out_dir(args, "results"), args.seed, args.jobs)
            for c in bundle.summary["checks"]:
                print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
            print(f"{args.figure}: {'passed' if bundle.passed else 'FAILED'} "
                  f"({bundle.summary['n_checks']} checks) -> {bundle.out_dir}")
            return 0 if bundle.passed else 2
        cfg = load_config(args.config)
        out = _out_dir(args, cfg.output_dir)
        if args.command == "simulate":
            bundle = cmd_simulate(cfg, out, args.seed)
        elif args.command == "optimize":
            bundle = cmd_optimize(cfg, out, args.seed, args.jobs)
        else:
            bundle = cmd_bound(cfg, out, args.seed)
    except (ConfigError, InfeasibleWindowError, InfeasibleTargetError, ValueError,
            OSError) as exc:
        print(f"tvcavity: error: {exc}", file=sys.stderr)
        return 1
    merit = bundle.summary.get("merit")
    if merit:
        print(json.dumps(merit))
    print(f"wrote {len(bundle.files)} files to {bundle.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
