"""Inner truncations of the single-state counterexample are empty at every T,
while the uniform stationary policy is feasible for the original problem.

    python3 scripts/counterexample_demo.py --max-T 8
"""
import argparse

from crsmdp.evaluation import discounted_cost_finite, discounted_cost_infinite
from crsmdp.model import MarkovPolicy, counterexample_model, uniform_rule
from crsmdp.augmented import solve_crsmdp
from crsmdp.truncation import Mode, max_violation, truncation_bounds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-T", type=int, default=8)
    args = ap.parse_args()

    model = counterexample_model()
    phi = MarkovPolicy.stationary(uniform_rule(model))
    c1, c2 = (c.cost for c in model.constraints)
    print(f"{'T':>3} {'sum of lower bounds':>20} {'L_T(C1)+L_T(C2)':>16} {'lower':>11} {'upper':>8}")
    for T in range(1, args.max_T + 1):
        lo = sum(truncation_bounds(model, T, Mode.LOWER).bounds)
        total = float(discounted_cost_finite(phi, c1, T, model)[0] + discounted_cost_finite(phi, c2, T, model)[0])
        s_lo = solve_crsmdp(model, T, Mode.LOWER).lp_status.value
        s_up = solve_crsmdp(model, T, Mode.UPPER).lp_status.value
        print(f"{T:>3} {lo:>20.12f} {total:>16.12f} {s_lo:>11} {s_up:>8}")
    L = [float(discounted_cost_infinite(phi, c, model)[0]) for c in (c1, c2)]
    print(f"uniform policy: L(C1) = {L[0]!r}, L(C2) = {L[1]!r}, h = {max_violation(phi, model)!r}")


if __name__ == "__main__":
    main()
