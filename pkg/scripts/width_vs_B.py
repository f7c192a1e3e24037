"""Coverage and mean width of the cheap interval as B grows, for one scenario.

Prints the numbers behind a width-versus-B plot, e.g.::

    python scripts/width_vs_B.py exp_quantile --B 1,2,3,5,10,20,50 --reps 500
"""

import argparse

from cheapboot.harness import ExperimentConfig, MethodSpec, format_report, run_experiment
from cheapboot.scenarios import SCENARIOS, scenario


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("scenario", choices=sorted(k for k, v in SCENARIOS.items() if not v.nested))
    parser.add_argument("--B", default="1,2,3,5,10,20")
    parser.add_argument("--reps", type=int, default=500)
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    Bs = tuple(int(b) for b in args.B.split(","))
    cfg = ExperimentConfig(
        scenario(args.scenario), (MethodSpec("cheap", Bs),), repetitions=args.reps, seed=args.seed
    )
    print(format_report(run_experiment(cfg, args.threads)), end="")


if __name__ == "__main__":
    main()
