"""Inner/outer truncated constraint sets, feasibility checks and the max-violation map."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .evaluation import (
    DEFAULT_MAX_HORIZON,
    CertifiedValue,
    discounted_cost_finite,
    discounted_cost_infinite,
    rs_cost_finite,
    rs_cost_infinite,
)
from .model import ConstraintKind, ConstraintSpec, MarkovPolicy, MdpModel, cost_bound

DEFAULT_TOL = 1e-9


class Mode(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"
    ORIGINAL = "original"


class HorizonError(ValueError):
    pass


@dataclass(frozen=True)
class EffectiveConstraint:
    spec: ConstraintSpec
    bound: float
    horizon: int | None  # None means infinite horizon


@dataclass(frozen=True)
class TruncatedBounds:
    mode: Mode
    horizon: int | None
    constraints: tuple[EffectiveConstraint, ...]

    @property
    def bounds(self) -> list[float]:
        return [c.bound for c in self.constraints]


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    slacks: tuple[float, ...]
    max_violation: float
    values: tuple[CertifiedValue, ...] = ()

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "slacks": list(self.slacks),
            "max_violation": None if math.isinf(self.max_violation) else self.max_violation,
            "values": [{"value": v.value, "radius": v.radius} for v in self.values],
        }


def truncation_bounds(model: MdpModel, T: int | None, mode: Mode | str) -> TruncatedBounds:
    mode = Mode(mode)
    if mode is Mode.ORIGINAL:
        effs = tuple(
            EffectiveConstraint(c, c.bound, c.horizon if c.kind.is_finite else None)
            for c in model.constraints
        )
        return TruncatedBounds(mode, T, effs)
    if T is None or T < 1:
        raise HorizonError("a horizon T >= 1 is required for lower/upper modes")
    finite = [c.horizon for c in model.constraints if c.kind.is_finite]
    if finite and T < max(finite):
        raise HorizonError(
            f"horizon below finite-constraint horizon: T={T} < {max(finite)}"
        )
    b = cost_bound(model)
    shift = b.K * model.beta**T
    KT = b.K_T(T)
    effs = []
    for c in model.constraints:
        if c.kind is ConstraintKind.DISCOUNTED_INF:
            bound = c.bound - shift if mode is Mode.LOWER else c.bound + shift
            effs.append(EffectiveConstraint(c, bound, T))
        elif c.kind is ConstraintKind.RS_INF:
            bound = c.bound / KT if mode is Mode.LOWER else c.bound * KT
            effs.append(EffectiveConstraint(c, bound, T))
        else:
            effs.append(EffectiveConstraint(c, c.bound, c.horizon))
    return TruncatedBounds(mode, T, tuple(effs))


def evaluate_constraint(policy: MarkovPolicy, model: MdpModel, c: ConstraintSpec,
                        horizon: int | None, tol: float = DEFAULT_TOL) -> CertifiedValue:
    """Constraint cost at the initial state; exact except for infinite-horizon RS."""
    x = model.initial_state
    rs = c.kind.is_rs
    if horizon is None:
        if rs:
            return rs_cost_infinite(policy, c.cost, model, tol)[x]
        return CertifiedValue(float(discounted_cost_infinite(policy, c.cost, model)[x]), 0.0, 0)
    f = rs_cost_finite if rs else discounted_cost_finite
    return CertifiedValue(float(f(policy, c.cost, horizon, model)[x]), 0.0, horizon)


def constraint_values(policy: MarkovPolicy, model: MdpModel,
                      tol: float = DEFAULT_TOL) -> list[CertifiedValue]:
    tb = truncation_bounds(model, None, Mode.ORIGINAL)
    return [evaluate_constraint(policy, model, e.spec, e.horizon, tol / 10) for e in tb.constraints]


def max_violation(policy: MarkovPolicy, model: MdpModel, tol: float = DEFAULT_TOL) -> float:
    """h(pi): largest (value - bound) over all original constraints; -inf if unconstrained.

    RS infinite-horizon values enter through the midpoint of a certified interval
    whose radius is at most tol/10.
    """
    vals = constraint_values(policy, model, tol)
    if not vals:
        return -math.inf
    return max(v.value - c.bound for v, c in zip(vals, model.constraints))


def check_feasibility(policy: MarkovPolicy, model: MdpModel, T: int | None = None,
                      mode: Mode | str = Mode.ORIGINAL, tol: float = DEFAULT_TOL) -> FeasibilityVerdict:
    mode = Mode(mode)
    if mode is not Mode.ORIGINAL and T is None:
        raise HorizonError("lower/upper feasibility needs a horizon")
    tb = truncation_bounds(model, T, mode)
    values, slacks = [], []
    for e in tb.constraints:
        v = evaluate_constraint(policy, model, e.spec, e.horizon, tol / 10)
        values.append(v)
        # conservative: the whole certified interval must sit below the bound
        slacks.append(e.bound - v.upper)
    worst = -min(slacks) if slacks else -math.inf
    return FeasibilityVerdict(worst <= tol, tuple(slacks), worst, tuple(values))


def is_eps_feasible(policy: MarkovPolicy, model: MdpModel, eps: float,
                    tol: float = DEFAULT_TOL) -> bool:
    if not eps > 0:
        raise ValueError("eps must be > 0")
    vals = constraint_values(policy, model, tol)
    return all(v.upper <= c.bound + eps for v, c in zip(vals, model.constraints))


def horizon_for_epsilon(model: MdpModel, eps: float,
                        max_horizon: int = DEFAULT_MAX_HORIZON) -> int:
    """Smallest T making every outer-truncation-feasible policy eps-feasible.

    Requires K beta^T <= eps/2 and exp(|gamma| K) (K_T - 1) <= eps/2.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    b = cost_bound(model)
    g = abs(model.gamma)
    head = math.exp(g * b.K)
    for T in range(1, max_horizon + 1):
        bT = model.beta**T
        if b.K * bT <= eps / 2 and head * math.expm1(g * b.K * bT) <= eps / 2:
            return T
    raise HorizonError(f"cap exceeded: no horizon <= {max_horizon} reaches eps={eps:g}")


def constraint_envelope(model: MdpModel, T: int) -> float:
    """max(K beta^T, exp(|gamma| K)(K_T - 1)): per-constraint truncation slack at T."""
    b = cost_bound(model)
    g = abs(model.gamma)
    return max(b.K * model.beta**T, math.exp(g * b.K) * math.expm1(g * b.K * model.beta**T))
