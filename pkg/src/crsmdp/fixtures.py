"""Small hand-built instances used by tests, scripts and the CLI selftest."""
from __future__ import annotations

import numpy as np

from .evaluation import (
    discounted_cost_finite,
    discounted_cost_infinite,
    rs_cost_finite,
    rs_cost_infinite,
)
from .model import (
    ConstraintKind,
    ConstraintSpec,
    MarkovPolicy,
    MdpModel,
    counterexample_model,
    random_rule,
)

__all__ = ["counterexample_model", "failure_model", "budget_model", "mixed_model"]


def failure_model(caution_budget: float = 0.8, risk_bound: float = 1.5) -> MdpModel:
    """Machine that is either working (s0) or failed (s1, absorbing).

    a0 is risky (fails w.p. 0.3), a1 is cautious (fails w.p. 0.05) but draws on a
    discounted caution budget. Objective and RS constraint costs depend only on the
    state, so the augmented layers grow linearly in T.
    With the default bounds neither stationary deterministic policy is feasible
    (always-a0 breaks the risk bound, always-a1 the budget) but mixtures are, with
    slack: the inner truncation is already feasible from T=5.
    """
    P = np.zeros((2, 2, 2))
    P[0, 0] = [0.7, 0.3]
    P[0, 1] = [0.95, 0.05]
    P[1, :, 1] = 1.0
    R = np.array([[0.0, 0.0], [1.0, 1.0]])
    caution = np.array([[0.0, 1.0], [0.0, 0.0]])
    risk = np.array([[0.1, 0.1], [0.6, 0.6]])
    return MdpModel(
        P, R, beta=0.5, gamma=1.0, initial_state=0,
        constraints=(
            ConstraintSpec(ConstraintKind.DISCOUNTED_INF, caution, caution_budget, name="caution"),
            ConstraintSpec(ConstraintKind.RS_INF, risk, risk_bound, name="risk"),
        ),
        state_names=("working", "failed"),
        action_names=("risky", "cautious"),
    )


def budget_model(budget: float = 0.38) -> MdpModel:
    """Two states, two actions; action a1 is cheaper but rationed at epoch 0 only.

    With T=2 the constrained optimum randomizes in the initial state.
    """
    P = np.zeros((2, 2, 2))
    P[0, 0] = [0.2, 0.8]
    P[0, 1] = [0.6, 0.4]
    P[1, 0] = [0.5, 0.5]
    P[1, 1] = [0.9, 0.1]
    R = np.array([[1.0, 0.2], [0.5, 0.0]])
    C = np.array([[0.0, 1.0], [0.0, 1.0]])
    return MdpModel(
        P, R, beta=0.6, gamma=0.8, initial_state=0,
        constraints=(ConstraintSpec(ConstraintKind.DISCOUNTED_FIN, C, budget, horizon=1, name="budget"),),
    )


def mixed_model(seed: int = 0, m: int = 2, n: int = 2, quantile: float = 0.75) -> MdpModel:
    """Random model carrying one constraint of each kind.

    Each bound is the given quantile of that constraint's value over a sample of
    random stationary policies, so all feasibility verdicts occur in practice.
    """
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(m), size=(m, n))
    P = P / P.sum(axis=-1, keepdims=True)
    beta = float(rng.uniform(0.4, 0.7))
    gamma = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1.0))
    R = rng.uniform(0, 1, size=(m, n))
    costs = [rng.uniform(0, 1, size=(m, n)) for _ in range(4)]
    base = MdpModel(P, R, beta, gamma, 0)
    sample = [MarkovPolicy.stationary(random_rule(rng, m, n)) for _ in range(64)]
    evals = [
        lambda p: discounted_cost_infinite(p, costs[0], base)[0],
        lambda p: rs_cost_infinite(p, costs[1], base, 1e-12)[0].value,
        lambda p: discounted_cost_finite(p, costs[2], 2, base)[0],
        lambda p: rs_cost_finite(p, costs[3], 3, base)[0],
    ]
    b = [float(np.quantile([f(p) for p in sample], quantile)) for f in evals]
    cons = (
        ConstraintSpec(ConstraintKind.DISCOUNTED_INF, costs[0], b[0], name="L"),
        ConstraintSpec(ConstraintKind.RS_INF, costs[1], b[1], name="J"),
        ConstraintSpec(ConstraintKind.DISCOUNTED_FIN, costs[2], b[2], horizon=2, name="Lbar"),
        ConstraintSpec(ConstraintKind.RS_FIN, costs[3], b[3], horizon=3, name="Jbar"),
    )
    return base.with_constraints(cons)
