"""Cumulative bound checks for each policy/game pairing, one summary line each."""

import argparse

from partmon.harness import ExperimentConfig, run_experiment

RUNS = [
    ("spam", {"cost": 0.25}, "mixture-of-diracs:constant", "mario", 100),
    ("spam", {"cost": 0.5}, "iid-product:0.5,0.5", "mario-degenerate", 12),
    ("spam", {"cost": 0.75}, "mixture-of-diracs:constant", "forced:auto", 300),
    ("ski", {}, "sampled-mixture:32", "mario", 50),
    ("bandit", {"k": 3}, "sampled-mixture:64:bernoulli", "thompson", 100),
    ("cops", {"k": 3}, "sampled-mixture:64:bernoulli", "thompson", 100),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-R", "--replicates", type=int, default=500)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    for game, kw, prior, policy, n in RUNS:
        run = run_experiment(ExperimentConfig(game, prior, policy, n, args.replicates, args.seed, game_kwargs=kw))
        m = run.meta
        steps = m["step_checks"]
        print(
            f"{game:<7}{policy:<17} n={n:<4} regret {m['regret']['mean']:7.3f} +- {m['regret']['se']:.3f}"
            f"  {m['bound']['theorem']:<8} rhs {m['bound']['rhs']:8.2f}"
            f"  step failures {steps['failures']}/{steps['checked']}  m={m['max_ancestors']}"
            f"  {'PASS' if m['passed'] else 'FAIL'}"
        )


if __name__ == "__main__":
    main()
