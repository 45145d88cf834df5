"""Bayesian regret of Thompson and Mario sampling on the spam game as the horizon grows."""

import argparse
import csv
import sys

from partmon.diagnostics import theorem_rhs
from partmon.harness import ExperimentConfig, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cost", type=float, default=0.25)
    parser.add_argument("--horizons", type=int, nargs="*", default=[10, 25, 50, 100, 200])
    parser.add_argument("-R", "--replicates", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = csv.writer(sys.stdout)
    out.writerow(["policy", "n", "regret", "se", "bound"])
    for n in args.horizons:
        for policy in ("thompson", "mario"):
            cfg = ExperimentConfig("spam", "mixture-of-diracs:constant", policy, n, args.replicates, args.seed,
                                   step_checks=False, game_kwargs={"cost": args.cost})
            run = run_experiment(cfg)
            out.writerow([policy, n, f"{run.mean_regret:.4f}", f"{run.standard_error:.4f}",
                          f"{theorem_rhs('mario', n, 3, 2):.2f}"])


if __name__ == "__main__":
    main()
