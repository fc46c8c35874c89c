"""Command-line front end.

Exit codes: 0 success/feasible, 2 infeasible verdict, 1 error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import oracle
from .augmented import DEFAULT_MERGE_TOL, layer_cap_from_env, solve_crsmdp
from .evaluation import (
    discounted_cost_finite,
    discounted_cost_infinite,
    rs_cost_finite,
    rs_cost_infinite,
)
from .files import load_model, load_policy
from .metric import MetricConfig, lipschitz_bound_discounted, lipschitz_bound_rs
from .model import MarkovPolicy, cost_bound, counterexample_model, random_model, random_policy, uniform_rule
from .simplex import LpStatus
from .truncation import (
    DEFAULT_TOL,
    Mode,
    check_feasibility,
    constraint_values,
    horizon_for_epsilon,
    is_eps_feasible,
    max_violation,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


def _clean(obj):
    """Make numpy/inf values JSON-safe (non-finite floats become null)."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _emit(doc, args, table: str | None = None):
    text = table if (args.pretty and table is not None) else json.dumps(_clean(doc), indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _g(x) -> str:
    return "nan" if x is None else f"{x:.17g}"


def _parse_sweep(spec: str) -> list[int]:
    lo, sep, hi = spec.partition("..")
    if not sep:
        raise UsageError("--sweep expects T1..T2")
    lo, hi = int(lo), int(hi)
    if lo < 1 or hi < lo:
        raise UsageError("--sweep needs 1 <= T1 <= T2")
    return list(range(lo, hi + 1))


def cmd_solve(args) -> int:
    if not args.model:
        raise UsageError("solve requires --model")
    model = load_model(args.model, renormalize=not args.no_renormalize)
    if args.sweep:
        horizons = _parse_sweep(args.sweep)
    elif args.horizon is not None:
        horizons = [args.horizon]
    elif args.epsilon is not None:
        horizons = [horizon_for_epsilon(model, args.epsilon)]
    else:
        raise UsageError("solve requires --horizon, --epsilon or --sweep")
    if any(T < 1 for T in horizons):
        raise UsageError("horizon must be >= 1")
    cap = args.layer_cap if args.layer_cap is not None else layer_cap_from_env()

    def run(T):
        return solve_crsmdp(model, T, args.mode, tail=args.tail, tol=args.tol,
                            layer_cap=cap, merge_tol=args.merge_tol)

    with ThreadPoolExecutor(max_workers=min(8, len(horizons))) as pool:
        reports = list(pool.map(run, horizons))
    docs = [r.to_dict() for r in reports]
    lines = [f"{'T':>4}  {'status':<11} {'value':>24}  {'eps-feasibility':>24}"]
    for r in reports:
        lines.append(f"{r.horizon:>4}  {r.lp_status.value:<11} {_g(r.optimal_value):>24}  "
                     f"{_g(r.eps_feasibility):>24}")
    _emit(docs[0] if len(docs) == 1 else docs, args, "\n".join(lines))
    if any(r.lp_status is LpStatus.INFEASIBLE for r in reports):
        return EXIT_INFEASIBLE
    return EXIT_OK if all(r.lp_status is LpStatus.OPTIMAL for r in reports) else EXIT_ERROR


def _policy_arg(args, model) -> MarkovPolicy:
    if not args.policy:
        raise UsageError("this command requires --policy (or --uniform)")
    if args.policy == "uniform":
        return MarkovPolicy.stationary(uniform_rule(model))
    policy = load_policy(args.policy)
    if policy.shape != (model.num_states, model.num_actions):
        raise UsageError(f"policy shape {policy.shape} does not match the model")
    return policy


def cmd_eval(args) -> int:
    if not args.model:
        raise UsageError("eval requires --model")
    if args.horizon is None or args.horizon < 1:
        raise UsageError("eval requires --horizon >= 1")
    model = load_model(args.model, renormalize=not args.no_renormalize)
    policy = _policy_arg(args, model)
    T, x = args.horizon, model.initial_state
    costs = [("objective", model.objective_cost)] + [
        (c.name or f"c{i}", c.cost) for i, c in enumerate(model.constraints)]
    out = {"horizon": T, "initial_state": x, "costs": {}}
    lines = [f"{'cost':<12} {'L_T(x)':>24} {'L(x)':>24} {'J_T(x)':>24} {'J(x)':>24} {'+/-':>10}"]
    for name, cost in costs:
        lT = discounted_cost_finite(policy, cost, T, model)
        linf = discounted_cost_infinite(policy, cost, model)
        jT = rs_cost_finite(policy, cost, T, model)
        jinf = rs_cost_infinite(policy, cost, model, args.tol)
        out["costs"][name] = {
            "discounted_finite": {"value": lT[x], "vector": lT},
            "discounted_infinite": {"value": linf[x], "vector": linf},
            "rs_finite": {"value": jT[x], "vector": jT},
            "rs_infinite": {"value": jinf[x].value, "radius": jinf[x].radius,
                            "vector": [v.value for v in jinf],
                            "radii": [v.radius for v in jinf]},
        }
        lines.append(f"{name:<12} {_g(lT[x]):>24} {_g(linf[x]):>24} {_g(jT[x]):>24} "
                     f"{_g(jinf[x].value):>24} {jinf[x].radius:>10.2e}")
    cfg = MetricConfig(args.delta) if args.delta is not None else MetricConfig.default(model.beta)
    cfg.validate(model.beta)
    b = cost_bound(model)
    out["lipschitz"] = {
        "delta": cfg.delta,
        "discounted_finite": lipschitz_bound_discounted(T, b, model.beta, cfg),
        "discounted_infinite": lipschitz_bound_discounted(math.inf, b, model.beta, cfg),
        "rs_finite": lipschitz_bound_rs(T, b, model.beta, model.gamma, cfg),
    }
    if args.oracle:
        ps = oracle.enumerate_paths(policy, model, T)
        out["oracle"] = {name: {"discounted_finite": ps.expected_discounted(cost),
                                "rs_finite": ps.expected_rs(cost, model.gamma)}
                         for name, cost in costs}
    _emit(out, args, "\n".join(lines))
    return EXIT_OK


def cmd_check(args) -> int:
    if not args.model:
        raise UsageError("check requires --model")
    eps = args.epsilon or 0.0
    if eps < 0:
        raise UsageError("--epsilon must be >= 0")
    model = load_model(args.model, renormalize=not args.no_renormalize)
    policy = _policy_arg(args, model)
    mode = Mode(args.mode) if args.mode else Mode.ORIGINAL
    if not model.constraints:
        _emit({"constraints": 0, "message": "no constraints", "feasible": True}, args,
              "no constraints")
        return EXIT_OK
    verdict = check_feasibility(policy, model, args.horizon, mode, args.tol)
    h = max_violation(policy, model, args.tol)
    uncertainty = max(v.radius for v in constraint_values(policy, model, args.tol))
    eps_ok = is_eps_feasible(policy, model, eps, args.tol) if eps > 0 else verdict.feasible
    doc = {"mode": mode.value, "horizon": args.horizon, "verdict": verdict.to_dict(),
           "h": h, "h_uncertainty": uncertainty, "epsilon": eps, "eps_feasible": eps_ok}
    lines = [f"{'constraint':<12} {'bound':>24} {'value':>24} {'slack':>24}"]
    for c, v, s in zip(model.constraints, verdict.values, verdict.slacks):
        lines.append(f"{c.name or c.kind.value:<12} {_g(c.bound):>24} {_g(v.value):>24} {_g(s):>24}")
    lines.append(f"h = {_g(h)}  feasible = {verdict.feasible}  eps({eps:g})-feasible = {eps_ok}")
    _emit(doc, args, "\n".join(lines))
    return EXIT_OK if (verdict.feasible or eps_ok) else EXIT_INFEASIBLE


def run_counterexample(max_T: int = 8, mode: Mode | str = Mode.LOWER) -> dict:
    mode = Mode(mode)
    model = counterexample_model()
    rows = []
    for T in range(1, max_T + 1):
        rep = solve_crsmdp(model, T, mode)
        rows.append({"T": T, "status": rep.lp_status.value})
    phi = MarkovPolicy.stationary(uniform_rule(model))
    verdict = check_feasibility(phi, model, None, Mode.ORIGINAL)
    L = [float(discounted_cost_infinite(phi, c.cost, model)[0]) for c in model.constraints]
    h = max_violation(phi, model)
    want = LpStatus.INFEASIBLE if mode is Mode.LOWER else LpStatus.OPTIMAL
    ok = (all(r["status"] == want.value for r in rows) and verdict.feasible
          and abs(h) <= 1e-12 and all(abs(v - 1.0) <= 1e-9 for v in L))
    return {"mode": mode.value, "rows": rows, "phi": {"L": L, "slacks": list(verdict.slacks),
            "feasible": verdict.feasible, "h": h}, "reproduced": ok}


def cmd_counterexample(args) -> int:
    max_T = 8 if args.horizon is None else args.horizon
    if max_T < 1:
        raise UsageError("--horizon must be >= 1")
    doc = run_counterexample(max_T, args.mode or Mode.LOWER)
    lines = [f"{'T':>3}  status"] + [f"{r['T']:>3}  {r['status'].upper()}" for r in doc["rows"]]
    phi = doc["phi"]
    lines.append(f"phi (uniform): L(C1)={_g(phi['L'][0])} L(C2)={_g(phi['L'][1])} "
                 f"slacks=({_g(phi['slacks'][0])}, {_g(phi['slacks'][1])}) h={_g(phi['h'])}")
    lines.append("reproduced" if doc["reproduced"] else "NOT reproduced")
    _emit(doc, args, "\n".join(lines))
    return EXIT_OK if doc["reproduced"] else EXIT_ERROR


def run_selftest(seed: int = 0, trials: int = 10) -> dict:
    rng = np.random.default_rng(seed)
    worst_eval, worst_dp = 0.0, 0.0
    for _ in range(trials):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        model = random_model(rng, m, n)
        pol = random_policy(rng, m, n)
        T = int(rng.integers(1, 5))
        ps = oracle.enumerate_paths(pol, model, T)
        x = model.initial_state
        worst_eval = max(
            worst_eval,
            abs(ps.expected_rs(model.objective_cost, model.gamma)
                - rs_cost_finite(pol, model.objective_cost, T, model)[x]),
            abs(ps.expected_discounted(model.objective_cost)
                - discounted_cost_finite(pol, model.objective_cost, T, model)[x]),
        )
    for _ in range(max(1, trials // 2)):
        m, n = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        model = random_model(rng, m, n)
        T = int(rng.integers(2, 4))
        ref, _ = oracle.dp_unconstrained_rs(model, T)
        rep = solve_crsmdp(model, T, Mode.UPPER)
        worst_dp = max(worst_dp, abs(rep.optimal_value - ref) / abs(ref))
    return {"seed": seed, "max_eval_error": worst_eval, "max_lp_dp_rel_error": worst_dp,
            "passed": worst_eval <= 1e-10 and worst_dp <= 1e-8}


def cmd_selftest(args) -> int:
    doc = run_selftest(args.seed)
    _emit(doc, args, f"eval vs enumeration: {doc['max_eval_error']:.3e}\n"
                     f"LP vs DP (relative): {doc['max_lp_dp_rel_error']:.3e}\n"
                     f"{'PASS' if doc['passed'] else 'FAIL'}")
    return EXIT_OK if doc["passed"] else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", help="model JSON file")
    common.add_argument("--policy", help="policy JSON (or a solve report), or 'uniform'")
    common.add_argument("--horizon", type=int, help="truncation horizon T")
    common.add_argument("--mode", choices=["lower", "upper"], help="inner (lower) or outer (upper) truncation")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="feasibility tolerance")
    common.add_argument("--delta", type=float, help="metric parameter in (beta, 1)")
    common.add_argument("--layer-cap", type=int, help="max augmented states per layer")
    common.add_argument("--merge-tol", type=float, default=DEFAULT_MERGE_TOL)
    common.add_argument("--tail", default="uniform", help="uniform | last | action:<k>")
    common.add_argument("--sweep", help="T1..T2: solve each horizon concurrently")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--pretty", action="store_true", help="human-readable table")
    common.add_argument("--oracle", action="store_true", help="eval: add path-enumeration values")
    common.add_argument("--no-renormalize", action="store_true",
                        help="do not rescale near-stochastic transition rows on load")

    parser = _Parser(prog="crsmdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, hlp in [("solve", "solve a truncated problem via the occupation LP"),
                      ("eval", "evaluate all cost families of a policy"),
                      ("check", "feasibility, h(pi) and eps-feasibility of a policy"),
                      ("counterexample", "run the built-in empty-inner-truncation example"),
                      ("selftest", "random cross-checks against brute-force oracles")]:
        sub.add_parser(name, parents=[common], help=hlp)
    return parser


COMMANDS = {"solve": cmd_solve, "eval": cmd_eval, "check": cmd_check,
            "counterexample": cmd_counterexample, "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"crsmdp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, RuntimeError, OverflowError) as exc:
        print(f"crsmdp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
