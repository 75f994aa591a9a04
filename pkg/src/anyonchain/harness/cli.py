"""``simulate`` command line entry point."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import PRESETS, ConfigError, ExperimentConfig, load_config
from .runner import DimensionCeilingError, run_experiment

EXIT_OK = 0
EXIT_TASK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RESOURCES = 3
EXIT_INTERNAL = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Run a preset or a JSON config and write CSV data plus manifest.json.")
    p.add_argument("target", help=f"preset name ({', '.join(PRESETS)}) or path to a JSON config")
    p.add_argument("--L", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--U", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--J-L", dest="J_L", type=float)
    p.add_argument("--J-R", dest="J_R", type=float)
    p.add_argument("--bc", choices=("obc", "pbc"))
    p.add_argument("--phi", type=float)
    p.add_argument("--tmax", dest="t_max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--cap", type=int)
    p.add_argument("--method", choices=("dense", "krylov", "auto"))
    p.add_argument("--offset", type=int, help="0-based start of the central block")
    p.add_argument("--exclude-center", action="store_true", default=None,
                   help="drop the middle site of odd chains from the imbalance")
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--allow-large", action="store_true", default=None,
                   help="raise the Fock-dimension ceiling for N=6 runs")
    return p


def config_from_args(args) -> ExperimentConfig:
    if args.target in PRESETS:
        cfg = ExperimentConfig(preset=args.target)
    elif Path(args.target).is_file():
        cfg = load_config(args.target)
    else:
        raise ConfigError([f"{args.target!r} is neither a preset nor a readable config file"])
    for name in ("L", "N", "theta", "U", "alpha", "J_L", "J_R", "bc", "phi", "t_max", "dt",
                 "cap", "method", "offset", "exclude_center", "out", "allow_large"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = run_experiment(config_from_args(args))
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionCeilingError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCES
    except Exception as exc:  # pragma: no cover - last-resort reporting
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    out = manifest.config["out"]
    print(f"wrote {len(manifest.files)} files to {out} in {manifest.wall_time:.2f} s")
    if manifest.errors:
        for e in manifest.errors:
            print(f"task {e['task']} failed: {e['error'].splitlines()[0]}", file=sys.stderr)
        return EXIT_TASK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
