"""Brute-force references: path enumeration, multiplicative DP, and grid search.

Nothing here calls into the evaluation recursions or the LP, so these can be
used as independent checks on both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import MarkovPolicy, MdpModel, check_risk_scale, deterministic_rule

ENUMERATION_BUDGET = 10**6
GRID_BUDGET = 5 * 10**6


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Trajectory:
    states: tuple[int, ...]
    actions: tuple[int, ...]
    probability: float
    discounted_cost: dict


@dataclass
class PathSet:
    """All positive-probability paths X_0, A_0, ..., A_{T-1}, X_T as arrays."""

    states: np.ndarray  # (N, T + 1)
    actions: np.ndarray  # (N, T)
    prob: np.ndarray  # (N,)
    beta: float

    @property
    def horizon(self) -> int:
        return self.actions.shape[1]

    def discounted(self, cost, horizon: int | None = None) -> np.ndarray:
        """Per-path sum_{t < horizon} beta^t cost(X_t, A_t)."""
        h = self.horizon if horizon is None else horizon
        cost = np.asarray(cost, dtype=float)
        total = np.zeros(len(self.prob))
        for t in range(h):
            total += self.beta**t * cost[self.states[:, t], self.actions[:, t]]
        return total

    def expected_discounted(self, cost, horizon: int | None = None) -> float:
        return float(self.prob @ self.discounted(cost, horizon))

    def expected_rs(self, cost, gamma: float, horizon: int | None = None) -> float:
        return float(self.prob @ np.exp(gamma * self.discounted(cost, horizon)))


def _check_budget(model: MdpModel, T: int) -> None:
    if (model.num_states * model.num_actions) ** T > ENUMERATION_BUDGET:
        raise BudgetExceeded(
            f"enumeration budget exceeded: (m*n)^T = {(model.num_states * model.num_actions) ** T}"
        )


def enumerate_paths(policy: MarkovPolicy | None, model: MdpModel, T: int,
                    start: int | None = None) -> PathSet:
    """Expand every path from the initial state. ``policy=None`` keeps all actions
    with unit action weight (used by the grid search)."""
    if T < 1:
        raise ValueError("horizon must be >= 1")
    _check_budget(model, T)
    m, n = model.num_states, model.num_actions
    x = model.initial_state if start is None else start
    states = np.array([[x]], dtype=int)
    actions = np.zeros((1, 0), dtype=int)
    prob = np.ones(1)
    P = model.transitions
    for t in range(T):
        s = states[:, -1]
        N = len(prob)
        # branch over every (a, s') pair
        a_idx = np.repeat(np.arange(n), m)
        s2_idx = np.tile(np.arange(m), n)
        if policy is None:
            w_act = np.ones((N, n))
        else:
            w_act = policy.rule(t)[s]
        w = w_act[:, a_idx] * P[s[:, None], a_idx[None, :], s2_idx[None, :]]
        keep = w > 0
        parent, branch = np.nonzero(keep)
        prob = prob[parent] * w[parent, branch]
        actions = np.hstack([actions[parent], a_idx[branch][:, None]])
        states = np.hstack([states[parent], s2_idx[branch][:, None]])
    return PathSet(states, actions, prob, model.beta)


def trajectories(policy: MarkovPolicy, model: MdpModel, T: int, costs: dict | None = None):
    """Yield Trajectory records (for inspection; use PathSet for bulk work)."""
    ps = enumerate_paths(policy, model, T)
    costs = costs or {"objective": model.objective_cost}
    disc = {k: ps.discounted(c) for k, c in costs.items()}
    for i in range(len(ps.prob)):
        yield Trajectory(
            tuple(int(v) for v in ps.states[i]),
            tuple(int(v) for v in ps.actions[i]),
            float(ps.prob[i]),
            {k: float(v[i]) for k, v in disc.items()},
        )


def enumerate_paths_rs_cost(policy: MarkovPolicy, cost, T: int, model: MdpModel) -> float:
    check_risk_scale(model)
    return enumerate_paths(policy, model, T).expected_rs(cost, model.gamma)


def enumerate_paths_discounted(policy: MarkovPolicy, cost, T: int, model: MdpModel) -> float:
    return enumerate_paths(policy, model, T).expected_discounted(cost)


def dp_unconstrained_rs(model: MdpModel, T: int) -> tuple[float, list[np.ndarray]]:
    """Backward multiplicative DP for min E[exp(gamma * discounted cost)].

    Ties go to the lowest action index.
    """
    if T < 1:
        raise ValueError("horizon must be >= 1")
    check_risk_scale(model)
    m, n = model.num_states, model.num_actions
    V = np.ones(m)
    rules = []
    for t in range(T - 1, -1, -1):
        q = np.exp(model.gamma * model.beta**t * model.objective_cost) * (model.transitions @ V)
        best = np.argmin(q, axis=1)
        V = q[np.arange(m), best]
        rules.append(deterministic_rule(m, n, best))
    rules.reverse()
    return float(V[model.initial_state]), rules


def grid_search_constrained(model: MdpModel, T: int, resolution: int = 21, bounds=None,
                            tol: float = 1e-9) -> tuple[float, MarkovPolicy | None]:
    """Exhaustive search over Bernoulli decision rules on a q-grid.

    ``bounds`` is a TruncatedBounds (or None for no constraints). Returns
    ``(inf, None)`` when no grid point is feasible.
    """
    m, n = model.num_states, model.num_actions
    if n != 2 or m > 2 or T > 3 or resolution not in (11, 21, 41):
        raise BudgetExceeded("instance too large for grid search (needs m<=2, n=2, T<=3, r in {11,21,41})")
    nrows = T * m
    total = resolution**nrows
    if total > GRID_BUDGET:
        raise BudgetExceeded(f"instance too large: {total} grid policies")
    grid = np.linspace(0.0, 1.0, resolution)
    ps = enumerate_paths(None, model, T)
    # path weight ignoring the policy; the policy contributes one factor per epoch
    row_of = ps.states[:, :T] + m * np.arange(T)[None, :]  # which (t, s) row is used at step t
    takes_first = ps.actions == 0
    objective = np.exp(model.gamma * ps.discounted(model.objective_cost))
    cons = []
    if bounds is not None:
        for e in bounds.constraints:
            h = e.horizon if e.horizon is not None else T
            f = ps.discounted(e.spec.cost, h)
            if e.spec.kind.is_rs:
                f = np.exp(model.gamma * f)
            cons.append((f, e.bound))

    best_val, best_idx = math.inf, None
    chunk = max(1, 2_000_000 // max(1, len(ps.prob)))
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(total, lo + chunk))
        # q for each (policy, row): mixed-radix digits of the policy index
        digits = (idx[:, None] // resolution ** np.arange(nrows)[None, :]) % resolution
        q = grid[digits]  # (B, nrows)
        qa = q[:, row_of]  # (B, N, T)
        factor = np.where(takes_first[None], qa, 1.0 - qa).prod(axis=2) * ps.prob[None, :]
        vals = factor @ objective
        ok = np.ones(len(idx), dtype=bool)
        for f, b in cons:
            ok &= factor @ f <= b + tol
        if ok.any():
            cand = np.where(ok, vals, np.inf)
            k = int(np.argmin(cand))
            if cand[k] < best_val:
                best_val, best_idx = float(cand[k]), int(idx[k])
    if best_idx is None:
        return math.inf, None
    digits = (best_idx // resolution ** np.arange(nrows)) % resolution
    q = grid[digits].reshape(T, m)
    rules = tuple(np.stack([q[t], 1.0 - q[t]], axis=1) for t in range(T))
    return best_val, MarkovPolicy(rules, np.full((m, 2), 0.5))
