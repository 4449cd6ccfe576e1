"""``sudocs`` command line: run one experiment and write its tables and manifest.

Exit codes: 0 success, 2 configuration error, 3 divergence, 4 a check failed
(only with ``--check``).
"""
import argparse
import logging
import os
import sys

from threadpoolctl import threadpool_limits

from ..errors import ConfigurationError, DivergenceError, FitDegenerateError
from ..theory.tradeoff import FRONTIER_COLUMNS
from .config import Experiment, ExperimentConfig
from .experiments import run_experiment
from .io import Manifest

log = logging.getLogger("sudocs")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_CHECK = 0, 2, 3, 4


def build_parser():
    ap = argparse.ArgumentParser(prog="sudocs", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=[e.value for e in Experiment])
    ap.add_argument("--config", help="JSON file overriding the experiment defaults")
    ap.add_argument("--out", default=None, help="output directory (default: out/<experiment>)")
    ap.add_argument("--seed-base", type=int, default=None)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None, help="BLAS threads (default 1)")
    ap.add_argument("--check", action="store_true", help="exit 4 if any check fails")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args):
    if args.config:
        cfg = ExperimentConfig.from_json(args.config, args.experiment)
    else:
        cfg = ExperimentConfig.from_dict({}, args.experiment)
    if args.seed_base is not None:
        cfg.seed_base = args.seed_base
    if args.trials is not None:
        cfg.trials = args.trials
    if args.threads is not None:
        cfg.threads = args.threads
    cfg.output_dir = args.out or os.path.join("out", cfg.experiment.value)
    cfg.validate()
    return cfg


def write_result(cfg, result):
    os.makedirs(cfg.output_dir, exist_ok=True)
    man = Manifest(cfg.output_dir, cfg.experiment.value, cfg.to_dict())
    for name, rows in result.tables.items():
        cols = None
        if name == "frontier":
            cols = list(FRONTIER_COLUMNS) + ["runtime_pred", "m1", "m2", "envelope_sdr"]
        man.table(name, rows, cols)
    info = {k: v for k, v in result.info.items() if k != "frontier"}
    if info:
        man.json("info", info)
    man.write(result.checks)
    return man


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        with threadpool_limits(limits=cfg.threads):
            result = run_experiment(cfg)
    except (ConfigurationError, FitDegenerateError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    write_result(cfg, result)
    for name, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"wrote {cfg.output_dir}")
    if args.check and not result.passed:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
