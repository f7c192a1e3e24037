"""Regenerate the coverage, width and critical-value tables into a results directory.

Usage::

    python scripts/reproduce.py                 # every table
    python scripts/reproduce.py table1 table4   # a subset
    python scripts/reproduce.py --reps 200      # quicker, noisier
"""

import argparse
import logging
import time
from pathlib import Path

from cheapboot.analytics import halfwidth_table
from cheapboot.cli import main as cli_main
from cheapboot.harness import ExperimentConfig, default_threads, emit_report, run_experiment

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

COVERAGE = {
    "table1": ["table1"],
    "table3": [
        "table3_folded_normal",
        "table3_double_exponential",
        "table3_correlation",
        "table3_lognormal_correlation",
    ],
    "table5": ["table5"],
    "noisy_mean": ["noisy_mean"],
    "multivariate": ["multivariate"],
    "subsampling": ["subsampling"],
    "regression": ["regression"],
}
TARGETS = ["table1", "table2", "table3", "table4", "table5", "noisy_mean", "multivariate", "subsampling", "regression"]

log = logging.getLogger("reproduce")


def run_coverage(name, out_dir, reps, seed, threads):
    doc = ExperimentConfig.load(CONFIGS / f"{name}.json").to_dict()
    if reps is not None:
        doc["repetitions"] = reps
    if seed is not None:
        doc["seed"] = seed
    report = run_experiment(ExperimentConfig.from_dict(doc), threads)
    emit_report(report, "csv", out_dir / f"{name}.csv")
    log.info("%s: %.1f s", name, report.runtime_seconds)


def run_halfwidth(out_dir):
    lines = ["B,mean,inflation_pct,sd"]
    lines += [f"{B},{m:.6g},{p:.6g},{s:.6g}" for B, m, p, s in halfwidth_table(20)]
    (out_dir / "table2.csv").write_text("\n".join(lines) + "\n")


def run_qtable(out_dir, grid, seed):
    argv = ["qtable", "--grid", grid, "--out", str(out_dir / f"table4_{grid}.csv")]
    if seed is not None:
        argv += ["--seed", str(seed)]
    if cli_main(argv) != 0:
        raise SystemExit("qtable failed")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("targets", nargs="*", help=f"any of {', '.join(TARGETS)} (default: all)")
    parser.add_argument("--out", default=str(ROOT / "results"))
    parser.add_argument("--reps", type=int, help="override the repetitions of every coverage config")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--grid", choices=("fast", "paper"), default="paper", help="theta grid for table4")
    args = parser.parse_args(argv)
    unknown = sorted(set(args.targets) - set(TARGETS))
    if unknown:
        parser.error(f"unknown target(s) {', '.join(unknown)}")
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = args.threads or default_threads()
    for target in args.targets or TARGETS:
        start = time.perf_counter()
        if target == "table2":
            run_halfwidth(out_dir)
        elif target == "table4":
            run_qtable(out_dir, args.grid, args.seed)
        else:
            for name in COVERAGE[target]:
                run_coverage(name, out_dir, args.reps, args.seed, threads)
        log.info("%s done in %.1f s", target, time.perf_counter() - start)


if __name__ == "__main__":
    main()
