"""Sweep the outer truncation horizon on the machine-failure fixture and write CSV.

Columns: T, LP value, certified infinite-horizon objective, max violation against
the original constraints, truncation envelope, wall time.

    python3 scripts/upper_sweep.py --T-max 12 --out sweep.csv
"""
import argparse
import csv
import sys
from concurrent.futures import ThreadPoolExecutor

from crsmdp.augmented import solve_crsmdp
from crsmdp.fixtures import failure_model
from crsmdp.truncation import Mode, constraint_envelope


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T-min", type=int, default=3)
    ap.add_argument("--T-max", type=int, default=10)
    ap.add_argument("--tail", default="action:0")
    ap.add_argument("--caution-budget", type=float, default=0.8)
    ap.add_argument("--risk-bound", type=float, default=1.5)
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args()

    model = failure_model(args.caution_budget, args.risk_bound)
    horizons = range(args.T_min, args.T_max + 1)
    with ThreadPoolExecutor() as pool:
        reports = list(pool.map(lambda T: solve_crsmdp(model, T, Mode.UPPER, tail=args.tail), horizons))

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["T", "status", "value", "certified_value", "certified_radius", "max_violation",
                "envelope", "wall_time"])
    for T, r in zip(horizons, reports):
        if r.policy is None:
            w.writerow([T, r.lp_status.value, "", "", "", "", constraint_envelope(model, T), r.stats["wall_time"]])
            continue
        v, rad = r.certified_objective
        w.writerow([T, r.lp_status.value, repr(r.optimal_value), repr(v), repr(rad),
                    repr(r.feasibility.max_violation), repr(constraint_envelope(model, T)),
                    f"{r.stats['wall_time']:.4f}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
