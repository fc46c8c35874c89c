"""Exact evaluation of discounted and risk-sensitive (RS) costs of Markov policies."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import MarkovPolicy, MdpModel, check_risk_scale, cost_bound

DEFAULT_MAX_HORIZON = 10_000
# certified radii are widened by this many ulps of the value per recursion step,
# absorbing the rounding accumulated over T multiplications
_ROUNDING_ULPS = 4


class ToleranceUnreachable(RuntimeError):
    pass


@dataclass(frozen=True)
class QFactors:
    horizon: int
    matrices: tuple[np.ndarray, ...]

    def __getitem__(self, t):
        return self.matrices[t]


@dataclass(frozen=True)
class CertifiedValue:
    """``value`` with a guarantee ``|true - value| <= radius``."""

    value: float
    radius: float
    horizon_used: int

    @property
    def lower(self) -> float:
        return self.value - self.radius

    @property
    def upper(self) -> float:
        return self.value + self.radius

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def expected_cost_vector(rule, cost) -> np.ndarray:
    return (np.asarray(cost) * np.asarray(rule)).sum(axis=1)


def transition_matrix(rule, model: MdpModel) -> np.ndarray:
    return np.einsum("sa,sat->st", np.asarray(rule), model.transitions)


def discounted_cost_finite(policy: MarkovPolicy, cost, T: int, model: MdpModel) -> np.ndarray:
    if T < 1:
        raise ValueError("horizon must be >= 1")
    beta = model.beta
    v = np.zeros(model.num_states)
    for t in range(T - 1, -1, -1):
        d = policy.rule(t)
        v = expected_cost_vector(d, cost) + beta * transition_matrix(d, model) @ v
    return v


def discounted_cost_infinite(policy: MarkovPolicy, cost, model: MdpModel) -> np.ndarray:
    """Exact infinite-horizon discounted cost: linear solve on the tail, then roll the prefix back."""
    beta = model.beta
    m = model.num_states
    P = transition_matrix(policy.tail, model)
    r = expected_cost_vector(policy.tail, cost)
    A = np.eye(m) - beta * P
    w = np.linalg.solve(A, r)
    residual = float(np.max(np.abs(A @ w - r))) if m else 0.0
    if residual > 1e-9:
        raise RuntimeError(f"internal error: tail solve residual {residual:.3e}")
    for d in reversed(policy.prefix):
        w = expected_cost_vector(d, cost) + beta * transition_matrix(d, model) @ w
    return w


def rs_q_factors(policy: MarkovPolicy, cost, T: int, model: MdpModel) -> QFactors:
    if T < 1:
        raise ValueError("horizon must be >= 1")
    check_risk_scale(model)
    cost = np.asarray(cost, dtype=float)
    beta, gamma = model.beta, model.gamma
    P = model.transitions
    Q = np.exp(gamma * beta ** (T - 1) * cost)
    out = [Q]
    for t in range(T - 1, 0, -1):
        # continuation value at t, per next state
        cont = (policy.rule(t) * Q).sum(axis=1)
        Q = np.exp(gamma * beta ** (t - 1) * cost) * (P @ cont)
        out.append(Q)
    out.reverse()
    return QFactors(T, tuple(out))


def rs_cost_finite(policy: MarkovPolicy, cost, T: int, model: MdpModel) -> np.ndarray:
    Q = rs_q_factors(policy, cost, T, model)
    return (policy.rule(0) * Q[0]).sum(axis=1)


def rs_horizon_for_tolerance(K: float, gamma: float, beta: float, tol: float,
                             max_horizon: int = DEFAULT_MAX_HORIZON) -> int:
    """Smallest T with exp(|g|K(1-b^T)) (K_T - 1) <= tol (plus rounding slack)."""
    g = abs(gamma)
    for T in range(1, max_horizon + 1):
        bT = beta**T
        head = math.exp(g * K * (1 - bT))
        if head * math.expm1(g * K * bT) + _ROUNDING_ULPS * T * math.ulp(head) <= tol:
            return T
    raise ToleranceUnreachable(
        f"tolerance unreachable: {tol:g} needs a horizon above {max_horizon}"
    )


def rs_cost_infinite(policy: MarkovPolicy, cost, model: MdpModel, tol: float = 1e-9,
                     max_horizon: int = DEFAULT_MAX_HORIZON) -> list[CertifiedValue]:
    """Certified infinite-horizon RS cost, one interval per initial state.

    Uses J / J_T in [1/K_T, K_T], so J_T * (K_T - 1) bounds the error.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    bounds = cost_bound(model)
    # the tail bound only needs the bound of this particular cost
    C = float(np.max(np.abs(cost))) if np.size(cost) else 0.0
    K = C / (1 - model.beta)
    check_risk_scale(model, bounds)
    if K == 0.0:
        # exp(0) along every path
        return [CertifiedValue(1.0, 0.0, 1) for _ in range(model.num_states)]
    T = rs_horizon_for_tolerance(K, model.gamma, model.beta, tol, max_horizon)
    J = rs_cost_finite(policy, cost, T, model)
    excess = math.expm1(abs(model.gamma) * K * model.beta**T)
    return [CertifiedValue(float(j), float(j * excess) + _ROUNDING_ULPS * T * math.ulp(float(j)), T)
            for j in J]
