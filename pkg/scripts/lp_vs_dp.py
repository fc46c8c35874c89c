"""Compare the unconstrained occupation LP against multiplicative DP on random models.

    python3 scripts/lp_vs_dp.py --models 20 --seed 0
"""
import argparse
import time

import numpy as np

from crsmdp.augmented import solve_crsmdp
from crsmdp.model import random_model
from crsmdp.oracle import dp_unconstrained_rs
from crsmdp.truncation import Mode


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", type=int, default=20)
    ap.add_argument("--max-size", type=int, default=2, help="max states and actions")
    ap.add_argument("--horizons", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'model':>5} {'m':>2} {'n':>2} {'T':>2} {'LP':>22} {'DP':>22} {'rel err':>9} {'layers':>14}")
    worst = 0.0
    t0 = time.perf_counter()
    for k in range(args.models):
        m, n = (int(v) for v in rng.integers(1, args.max_size + 1, size=2))
        model = random_model(rng, m, n)
        for T in args.horizons:
            rep = solve_crsmdp(model, T, Mode.UPPER)
            ref, _ = dp_unconstrained_rs(model, T)
            err = abs(rep.optimal_value - ref) / abs(ref)
            worst = max(worst, err)
            print(f"{k:>5} {m:>2} {n:>2} {T:>2} {rep.optimal_value:>22.16g} {ref:>22.16g} {err:>9.1e} "
                  f"{sum(rep.stats['layer_sizes']):>14}")
    print(f"worst relative error {worst:.2e} in {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
