"""Model data types for constrained risk-sensitive MDPs.

All arrays are stored read-only; a model is immutable once built.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

STOCHASTIC_TOL = 1e-12

# exp() overflows just above this exponent in double precision
MAX_EXPONENT = 709.0


class ConstraintKind(str, enum.Enum):
    DISCOUNTED_INF = "discounted_inf"
    RS_INF = "rs_inf"
    DISCOUNTED_FIN = "discounted_fin"
    RS_FIN = "rs_fin"

    @property
    def is_finite(self) -> bool:
        return self in (ConstraintKind.DISCOUNTED_FIN, ConstraintKind.RS_FIN)

    @property
    def is_rs(self) -> bool:
        return self in (ConstraintKind.RS_INF, ConstraintKind.RS_FIN)


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ConstraintSpec:
    kind: ConstraintKind
    cost: np.ndarray
    bound: float
    horizon: int | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        object.__setattr__(self, "cost", _frozen(self.cost))
        object.__setattr__(self, "bound", float(self.bound))
        if self.horizon is not None:
            object.__setattr__(self, "horizon", int(self.horizon))


@dataclass(frozen=True)
class MdpModel:
    """Finite CRSMDP.

    ``transitions[s, a, s']`` is p(s'|s,a); ``objective_cost[s, a]`` is R(s,a).
    """

    transitions: np.ndarray
    objective_cost: np.ndarray
    beta: float
    gamma: float
    initial_state: int = 0
    constraints: tuple[ConstraintSpec, ...] = ()
    state_names: tuple[str, ...] | None = None
    action_names: tuple[str, ...] | None = None
    # optional user override of the uniform cost bound C
    cost_bound_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "transitions", _frozen(self.transitions))
        object.__setattr__(self, "objective_cost", _frozen(self.objective_cost))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "initial_state", int(self.initial_state))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.transitions.ndim != 3:
            raise ValueError("transitions must be a 3-D array [s][a][s']")

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    def with_constraints(self, constraints: Sequence[ConstraintSpec]) -> "MdpModel":
        return MdpModel(
            self.transitions,
            self.objective_cost,
            self.beta,
            self.gamma,
            self.initial_state,
            tuple(constraints),
            self.state_names,
            self.action_names,
            self.cost_bound_override,
        )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


def validate_model(model: MdpModel) -> ValidationReport:
    report = ValidationReport()
    v = report.violations
    P = model.transitions
    m, n = model.num_states, model.num_actions
    if P.shape != (m, n, m):
        v.append(f"transitions has shape {P.shape}, expected ({m}, {n}, {m})")
        return report
    if not np.all(np.isfinite(P)):
        v.append("transitions contain non-finite entries")
        return report
    for s in range(m):
        for a in range(n):
            row = P[s, a]
            if np.any(row < 0):
                v.append(f"transition row (s={s}, a={a}) has negative entries")
            total = float(row.sum())
            if abs(total - 1.0) > STOCHASTIC_TOL:
                v.append(f"transition row (s={s}, a={a}) sums to {total!r}, not 1")
    if not 0.0 < model.beta < 1.0:
        v.append(f"discount factor must lie in (0, 1), got {model.beta!r}")
    if model.gamma == 0.0 or not math.isfinite(model.gamma):
        v.append("risk factor must be nonzero")
    if not 0 <= model.initial_state < m:
        v.append(f"initial_state {model.initial_state} out of range for {m} states")
    if model.objective_cost.shape != (m, n):
        v.append(f"objective_cost has shape {model.objective_cost.shape}, expected ({m}, {n})")
    elif not np.all(np.isfinite(model.objective_cost)):
        v.append("objective_cost contains non-finite entries")
    for i, c in enumerate(model.constraints):
        where = f"constraint {i} ({c.kind.value})"
        if c.cost.shape != (m, n):
            v.append(f"{where}: cost has shape {c.cost.shape}, expected ({m}, {n})")
        elif not np.all(np.isfinite(c.cost)):
            v.append(f"{where}: cost contains non-finite entries")
        if not math.isfinite(c.bound):
            v.append(f"{where}: bound is not finite")
        if c.kind.is_finite:
            if c.horizon is None or c.horizon < 1:
                v.append(f"{where}: finite-horizon constraint needs a positive horizon")
        elif c.horizon is not None:
            v.append(f"{where}: infinite-horizon constraint must not carry a horizon")
        if c.kind is ConstraintKind.RS_INF and not c.bound > 0:
            v.append(f"{where}: risk-sensitive bound must be > 0 (RS costs are positive)")
    return report


def renormalize_transitions(P, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    """Rescale rows whose sum is already within ``tol`` of one; others untouched."""
    P = np.array(P, dtype=float, copy=True)
    sums = P.sum(axis=-1, keepdims=True)
    close = np.abs(sums - 1.0) <= tol
    return np.where(close & (sums > 0), P / np.where(sums > 0, sums, 1.0), P)


@dataclass(frozen=True)
class CostBounds:
    C: float
    K: float
    gamma: float
    beta: float

    def K_T(self, T) -> float:
        """Multiplicative truncation factor exp(|gamma| K beta^T)."""
        return math.exp(abs(self.gamma) * self.K * self.beta**T)

    def K_T_minus_one(self, T) -> float:
        return math.expm1(abs(self.gamma) * self.K * self.beta**T)


def cost_bound(model: MdpModel) -> CostBounds:
    if model.cost_bound_override is not None:
        C = float(model.cost_bound_override)
    else:
        mats = [model.objective_cost] + [c.cost for c in model.constraints]
        C = max(float(np.max(np.abs(M))) if M.size else 0.0 for M in mats)
    return CostBounds(C=C, K=C / (1.0 - model.beta), gamma=model.gamma, beta=model.beta)


def check_risk_scale(model: MdpModel, bounds: CostBounds | None = None) -> None:
    bounds = bounds or cost_bound(model)
    if abs(model.gamma) * bounds.K >= MAX_EXPONENT:
        raise OverflowError(
            f"risk scale too large: |gamma|*K = {abs(model.gamma) * bounds.K:.6g} "
            f"overflows exp()"
        )


# -- decision rules and policies ------------------------------------------


def check_rule(d, m: int | None = None, n: int | None = None) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2:
        raise ValueError("a decision rule must be an m x n matrix")
    if m is not None and n is not None and d.shape != (m, n):
        raise ValueError(f"decision rule has shape {d.shape}, expected ({m}, {n})")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ValueError("decision rule has negative or non-finite entries")
    if np.any(np.abs(d.sum(axis=1) - 1.0) > STOCHASTIC_TOL):
        raise ValueError("decision rule rows must sum to 1")
    return d


@dataclass(frozen=True)
class MarkovPolicy:
    """Ultimately stationary Markov randomized policy.

    ``prefix[t]`` is applied at epoch t; ``tail`` at every epoch >= len(prefix).
    """

    prefix: tuple[np.ndarray, ...]
    tail: np.ndarray

    def __post_init__(self):
        tail = _frozen(check_rule(self.tail))
        prefix = tuple(_frozen(check_rule(d, *tail.shape)) for d in self.prefix)
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "prefix", prefix)

    @classmethod
    def stationary(cls, rule) -> "MarkovPolicy":
        return cls((), rule)

    @property
    def shape(self) -> tuple[int, int]:
        return self.tail.shape

    def rule(self, t: int) -> np.ndarray:
        return self.prefix[t] if t < len(self.prefix) else self.tail

    def rules(self, T: int) -> list[np.ndarray]:
        return [self.rule(t) for t in range(T)]


def uniform_rule(model: MdpModel) -> np.ndarray:
    m, n = model.num_states, model.num_actions
    return np.full((m, n), 1.0 / n)


def deterministic_rule(m: int, n: int, actions) -> np.ndarray:
    """Rule choosing ``actions[s]`` in state s (an int applies to all states)."""
    actions = np.broadcast_to(np.asarray(actions, dtype=int), (m,))
    d = np.zeros((m, n))
    d[np.arange(m), actions] = 1.0
    return d


# -- fixtures ---------------------------------------------------------------


def counterexample_model(gamma: float = 1.0) -> MdpModel:
    """Single-state, two-action counterexample whose inner truncations are all empty.

    Constraint costs are C1 = (1, 0) and C2 = 1 - C1 with bounds 1, beta = 1/2,
    and a zero objective.
    """
    P = np.ones((1, 2, 1))
    c1 = np.array([[1.0, 0.0]])
    return MdpModel(
        transitions=P,
        objective_cost=np.zeros((1, 2)),
        beta=0.5,
        gamma=gamma,
        initial_state=0,
        constraints=(
            ConstraintSpec(ConstraintKind.DISCOUNTED_INF, c1, 1.0, name="C1"),
            ConstraintSpec(ConstraintKind.DISCOUNTED_INF, 1.0 - c1, 1.0, name="C2"),
        ),
        state_names=("s",),
        action_names=("a1", "a2"),
    )


def random_model(
    rng: np.random.Generator,
    m: int,
    n: int,
    beta: float | None = None,
    gamma: float | None = None,
    cost_scale: float = 1.0,
) -> MdpModel:
    """Dense random unconstrained model, used by tests and selftest."""
    P = rng.dirichlet(np.ones(m), size=(m, n)) if m > 1 else np.ones((1, n, 1))
    P = P / P.sum(axis=-1, keepdims=True)
    if beta is None:
        beta = float(rng.uniform(0.3, 0.8))
    if gamma is None:
        gamma = float(rng.uniform(0.1, 1.0)) * (1 if rng.random() < 0.5 else -1)
    R = rng.uniform(-cost_scale, cost_scale, size=(m, n))
    return MdpModel(P, R, beta, gamma, int(rng.integers(m)))


def random_rule(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    d = rng.dirichlet(np.ones(n), size=m)
    return d / d.sum(axis=1, keepdims=True)


def random_policy(rng: np.random.Generator, m: int, n: int, max_prefix: int = 6) -> MarkovPolicy:
    k = int(rng.integers(0, max_prefix + 1))
    return MarkovPolicy(tuple(random_rule(rng, m, n) for _ in range(k)), random_rule(rng, m, n))
