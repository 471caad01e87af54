"""``sparseform`` command line.

Exit codes: 0 when every assertion passed, 2 on an assertion failure,
3 on a configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .dyadic import write_stepfn
from .exceptions import ConfigError, ParameterError
from .sparse import write_family

EXIT_OK = 0
EXIT_ASSERTION = 2
EXIT_CONFIG = 3

COMMANDS = ("characteristics", "norm", "testing", "verify", "hunt", "gen")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparseform", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--depth", type=int, help="override the grid depth")
    parser.add_argument("--workers", type=int, help="process pool size")
    return parser


def _load(args) -> ex.ExperimentConfig:
    config = ex.load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.depth is not None:
        config.depth = args.depth
        config.depths = None
    if args.workers is not None:
        config.workers = args.workers
    return config.validate()


def _gen(config: ex.ExperimentConfig, out: Path) -> list:
    """Write each sample's weights and family in the plain text formats."""
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(config.samples):
        s = ex.draw_sample(config, i)
        stem = f"sample{i:04d}"
        write_stepfn(s.setting.w, out / f"{stem}_w.txt")
        write_stepfn(s.setting.sigma, out / f"{stem}_sigma.txt")
        write_family(s.family, out / f"{stem}_family.txt")
        rows.append({"sample": i, "spec_a": json.dumps(s.spec_a, sort_keys=True),
                     "spec_b": json.dumps(s.spec_b, sort_keys=True), "family_size": len(s.family)})
    return rows


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
        out = Path(args.out)
        if args.command == "verify":
            report = ex.verify_theorem(config.suite, config)
            stem = f"verify_{config.suite}"
        elif args.command == "hunt":
            report = ex.hunt(config.conjecture, config)
            stem = f"hunt_{config.conjecture}"
        elif args.command == "gen":
            rows = _gen(config, out)
            report = ex.Report("gen", config, rows, {"violations": 0})
            stem = "gen"
        else:
            report = ex.run_samples(args.command, config)
            stem = args.command
        for path in ex.write_report(report, out, stem):
            print(path)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = {k: v for k, v in report.summary.items() if k not in ("best_w", "best_sigma", "family")}
    print(json.dumps(ex._jsonable(summary), sort_keys=True))
    return EXIT_ASSERTION if report.violations else EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
