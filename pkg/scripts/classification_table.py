"""Print the spam-game classification across revealing costs."""

import argparse

import numpy as np

from partmon.game import spam_game
from partmon.geometry import analyze


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--costs", type=float, nargs="*", default=[0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 1.0])
    args = parser.parse_args()
    print(f"{'cost':>6}  {'class':<20} {'nondeg':<7} {'v_local':>8} {'v_global':>9}")
    for c in args.costs:
        rep = analyze(spam_game(c))
        loc = [v for v in rep.local_sup_norm.values() if v is not None]
        glo = [v for v in rep.global_sup_norm.values() if v is not None]
        fmt = lambda xs: f"{max(xs):.3f}" if xs else "-"
        print(f"{c:6.2f}  {rep.classification.value:<20} {str(rep.nondegenerate):<7} {fmt(loc):>8} {fmt(glo):>9}")


if __name__ == "__main__":
    np.set_printoptions(precision=4)
    main()
