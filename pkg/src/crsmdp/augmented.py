"""Augmented-state occupation-measure LP for the truncated problems.

Finite-horizon RS costs become terminal costs of an MDP whose state carries
running exponential-cost accumulators (one for the objective and one per RS
constraint); discounted constraints stay as running costs.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .evaluation import rs_cost_finite, rs_cost_infinite
from .model import (
    ConstraintKind,
    MarkovPolicy,
    MdpModel,
    check_risk_scale,
    deterministic_rule,
    uniform_rule,
)
from .simplex import LpProblem, LpSolution, LpStatus, solve_lp
from .truncation import (
    DEFAULT_TOL,
    FeasibilityVerdict,
    Mode,
    TruncatedBounds,
    check_feasibility,
    truncation_bounds,
)

DEFAULT_LAYER_CAP = 200_000
DEFAULT_MERGE_TOL = 1e-12


class StateBudgetExceeded(RuntimeError):
    pass


def layer_cap_from_env(default: int = DEFAULT_LAYER_CAP) -> int:
    raw = os.environ.get("CRSMDP_LAYER_CAP")
    return int(raw) if raw else default


@dataclass(frozen=True)
class AugmentedState:
    base_state: int
    psi_objective: float
    psi_rs: tuple[float, ...]


@dataclass
class LayerTransitions:
    src: np.ndarray
    action: np.ndarray
    dst: np.ndarray
    prob: np.ndarray


@dataclass
class AugmentedChain:
    """Layers t = 0..T of augmented states.

    ``psi[t][:, 0]`` is the objective accumulator; column k >= 1 belongs to
    ``rs_constraints[k - 1]`` (an index into ``model.constraints``).
    """

    horizon: int
    num_actions: int
    base: list[np.ndarray]
    psi: list[np.ndarray]
    transitions: list[LayerTransitions]
    rs_constraints: tuple[int, ...]
    merge_tol: float = DEFAULT_MERGE_TOL

    @property
    def layer_sizes(self) -> list[int]:
        return [len(b) for b in self.base]

    def state(self, t: int, i: int) -> AugmentedState:
        p = self.psi[t][i]
        return AugmentedState(int(self.base[t][i]), float(p[0]), tuple(float(v) for v in p[1:]))

    def layer(self, t: int) -> list[AugmentedState]:
        return [self.state(t, i) for i in range(len(self.base[t]))]

    @property
    def terminal_objective(self) -> np.ndarray:
        return self.psi[-1][:, 0]

    @property
    def terminal_rs(self) -> np.ndarray:
        return self.psi[-1][:, 1:]


class _Dedup:
    """Merge (state, psi) pairs whose log-psi agree within ``tol`` componentwise."""

    def __init__(self, tol: float):
        self.tol = tol
        self.cell = 1000.0 * tol
        self.buckets: dict = {}
        self.base: list[int] = []
        self.logs: list[np.ndarray] = []

    def add(self, s: int, logpsi: np.ndarray) -> int:
        scaled = logpsi / self.cell
        cells = np.floor(scaled).astype(np.int64)
        frac = scaled - cells
        edge = self.tol / self.cell
        options = []
        for f in frac:
            o = [0]
            if f < edge:
                o.append(-1)
            if f > 1 - edge:
                o.append(1)
            options.append(o)
        for off in itertools.product(*options):
            key = (s, tuple(int(c + d) for c, d in zip(cells, off)))
            for idx in self.buckets.get(key, ()):
                if np.all(np.abs(self.logs[idx] - logpsi) <= self.tol):
                    return idx
        idx = len(self.base)
        self.base.append(s)
        self.logs.append(logpsi)
        self.buckets.setdefault((s, tuple(int(c) for c in cells)), []).append(idx)
        return idx


def _rs_components(model: MdpModel):
    """Constraint indices carried in psi: truncated-infinite RS first, then finite RS."""
    inf = [i for i, c in enumerate(model.constraints) if c.kind is ConstraintKind.RS_INF]
    fin = [i for i, c in enumerate(model.constraints) if c.kind is ConstraintKind.RS_FIN]
    return tuple(inf + fin)


def build_augmented_chain(model: MdpModel, T: int, layer_cap: int | None = None,
                          merge_tol: float = DEFAULT_MERGE_TOL) -> AugmentedChain:
    if T < 1:
        raise ValueError("horizon must be >= 1")
    for c in model.constraints:
        if c.kind is ConstraintKind.RS_FIN and c.horizon > T:
            raise ValueError(f"horizon below finite-constraint horizon: T={T} < {c.horizon}")
    check_risk_scale(model)
    cap = layer_cap_from_env() if layer_cap is None else layer_cap
    comps = _rs_components(model)
    costs = np.stack([model.objective_cost] + [model.constraints[i].cost for i in comps], axis=-1)
    freeze = [None] + [model.constraints[i].horizon for i in comps]
    m, n = model.num_states, model.num_actions
    P = model.transitions
    beta, gamma = model.beta, model.gamma

    base = [np.array([model.initial_state])]
    logpsi = [np.zeros((1, len(freeze)))]
    trans = []
    for t in range(T):
        # log of the per-step multiplicative factor for each (s, a, component)
        step = gamma * beta**t * costs
        for k, h in enumerate(freeze):
            if h is not None and t >= h:
                step[..., k] = 0.0
        dd = _Dedup(merge_tol)
        src, act, dst, prob = [], [], [], []
        for i, s in enumerate(base[t]):
            for a in range(n):
                nxt = logpsi[t][i] + step[s, a]
                for s2 in np.flatnonzero(P[s, a] > 0):
                    j = dd.add(int(s2), nxt)
                    src.append(i)
                    act.append(a)
                    dst.append(j)
                    prob.append(P[s, a, s2])
            if len(dd.base) > cap:
                raise StateBudgetExceeded(
                    f"state budget exceeded: layer {t + 1} grows past {cap} augmented states"
                )
        base.append(np.array(dd.base, dtype=int))
        logpsi.append(np.array(dd.logs).reshape(len(dd.base), len(freeze)))
        trans.append(LayerTransitions(np.array(src, dtype=int), np.array(act, dtype=int),
                                      np.array(dst, dtype=int), np.array(prob, dtype=float)))
    psi = [np.exp(lp) for lp in logpsi]
    return AugmentedChain(T, n, base, psi, trans, comps, merge_tol)


@dataclass
class OccupationLp:
    problem: LpProblem
    offsets: list[int]
    chain: AugmentedChain
    bounds: TruncatedBounds

    def var(self, t: int, i: int, a: int) -> int:
        return self.offsets[t] + i * self.chain.num_actions + a


def build_occupation_lp(chain: AugmentedChain, model: MdpModel, mode: Mode | str,
                        bounds: TruncatedBounds) -> OccupationLp:
    mode = Mode(mode)
    if bounds.mode is not mode or bounds.horizon != chain.horizon:
        raise ValueError("bounds do not match the requested mode/horizon")
    T, n = chain.horizon, chain.num_actions
    sizes = chain.layer_sizes
    offsets = [0]
    for t in range(T):
        offsets.append(offsets[-1] + sizes[t] * n)
    nv = offsets[T]

    def vidx(t, i, a):
        return offsets[t] + i * n + a

    neq = 1 + sum(sizes[1:T])
    A_eq = np.zeros((neq, nv))
    b_eq = np.zeros(neq)
    eq_names = ["init"]
    A_eq[0, [vidx(0, 0, a) for a in range(n)]] = 1.0
    b_eq[0] = 1.0
    row = 1
    for t in range(1, T):
        tr = chain.transitions[t - 1]
        for i in range(sizes[t]):
            A_eq[row + i, [vidx(t, i, a) for a in range(n)]] = 1.0
            eq_names.append(f"flow_t{t}_z{i}")
        np.add.at(A_eq, (row + tr.dst, vidx(t - 1, tr.src, tr.action)), -tr.prob)
        row += sizes[t]

    last = chain.transitions[T - 1]
    last_cols = vidx(T - 1, last.src, last.action)
    terminal = chain.psi[T]

    c = np.zeros(nv)
    np.add.at(c, last_cols, last.prob * terminal[last.dst, 0])

    rs_col = {ci: k + 1 for k, ci in enumerate(chain.rs_constraints)}
    ub_rows, b_ub, ub_names = [], [], []
    for ci, eff in enumerate(bounds.constraints):
        spec = eff.spec
        r = np.zeros(nv)
        if spec.kind.is_rs:
            np.add.at(r, last_cols, last.prob * terminal[last.dst, rs_col[ci]])
        else:
            for t in range(min(eff.horizon, T)):
                s = chain.base[t]
                r[offsets[t]:offsets[t + 1]] = (model.beta**t * spec.cost[s, :]).ravel()
        ub_rows.append(r)
        b_ub.append(eff.bound)
        ub_names.append(spec.name or f"{spec.kind.value}_{ci}")

    var_names = [f"y_t{t}_z{i}_a{a}" for t in range(T) for i in range(sizes[t]) for a in range(n)]
    prob = LpProblem(
        c,
        A_eq,
        b_eq,
        np.array(ub_rows).reshape(len(ub_rows), nv),
        np.array(b_ub),
        var_names=var_names,
        eq_names=eq_names,
        ub_names=ub_names,
    )
    return OccupationLp(prob, offsets, chain, bounds)


def extract_policy(chain: AugmentedChain, sol: LpSolution, num_states: int) -> list[np.ndarray]:
    """Marginalize occupation measures over psi and normalize per base state."""
    if sol.status is not LpStatus.OPTIMAL:
        raise ValueError("extraction needs an optimal LP solution")
    n = chain.num_actions
    y = np.clip(sol.y, 0.0, None)
    rules = []
    off = 0
    for t in range(chain.horizon):
        L = chain.layer_sizes[t]
        yt = y[off: off + L * n].reshape(L, n)
        off += L * n
        marg = np.zeros((num_states, n))
        np.add.at(marg, chain.base[t], yt)
        tot = marg.sum(axis=1, keepdims=True)
        d = np.where(tot > 1e-12, marg / np.where(tot > 1e-12, tot, 1.0), 1.0 / n)
        rules.append(d)
    return rules


def extend_ultimately_stationary(prefix, tail="uniform") -> MarkovPolicy:
    """Append a stationary tail; ``tail`` is a rule, "uniform", "last" or "action:<k>"."""
    prefix = list(prefix)
    if not prefix:
        raise ValueError("prefix must be nonempty")
    m, n = np.shape(prefix[0])
    if isinstance(tail, str):
        if tail == "uniform":
            tail = np.full((m, n), 1.0 / n)
        elif tail == "last":
            tail = prefix[-1]
        elif tail.startswith("action:"):
            tail = deterministic_rule(m, n, int(tail.split(":", 1)[1]))
        else:
            raise ValueError(f"unknown tail choice {tail!r}")
    return MarkovPolicy(tuple(prefix), tail)


@dataclass
class SolveReport:
    mode: Mode
    horizon: int
    lp_status: LpStatus
    optimal_value: float | None = None
    policy: MarkovPolicy | None = None
    feasibility: FeasibilityVerdict | None = None
    eps_feasibility: float | None = None
    certified_objective: tuple[float, float] | None = None
    extraction_gap: float | None = None
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode.value,
            "horizon": self.horizon,
            "status": self.lp_status.value,
            "value": self.optimal_value,
            "policy": None,
            "feasibility": None,
            "certified_objective": None,
            "stats": self.stats,
        }
        if self.policy is not None:
            d["policy"] = policy_to_dict(self.policy)
        if self.feasibility is not None:
            d["feasibility"] = self.feasibility.to_dict()
            d["feasibility"]["eps_feasibility"] = self.eps_feasibility
        if self.certified_objective is not None:
            v, r = self.certified_objective
            d["certified_objective"] = {"value": v, "radius": r}
        if self.extraction_gap is not None:
            d["extraction_gap"] = self.extraction_gap
        return d


def policy_to_dict(policy: MarkovPolicy) -> dict:
    return {"rules": [d.tolist() for d in policy.prefix], "tail": policy.tail.tolist()}


def solve_crsmdp(model: MdpModel, T: int, mode: Mode | str = Mode.UPPER, tail="uniform",
                 tol: float = DEFAULT_TOL, layer_cap: int | None = None,
                 merge_tol: float = DEFAULT_MERGE_TOL, certify_tol: float = 1e-9) -> SolveReport:
    mode = Mode(mode)
    if mode is Mode.ORIGINAL:
        raise ValueError("solve needs mode lower or upper")
    t0 = time.perf_counter()
    bounds = truncation_bounds(model, T, mode)
    chain = build_augmented_chain(model, T, layer_cap, merge_tol)
    olp = build_occupation_lp(chain, model, mode, bounds)
    sol = solve_lp(olp.problem)
    stats = {
        "layer_sizes": chain.layer_sizes,
        "lp_vars": olp.problem.num_vars,
        "lp_eq_rows": int(olp.problem.b_eq.size),
        "lp_ub_rows": int(olp.problem.b_ub.size),
        "pivots": sol.pivots,
        "merge_tol": merge_tol,
    }
    report = SolveReport(mode, T, sol.status, stats=stats)
    if sol.status is LpStatus.OPTIMAL:
        rules = extract_policy(chain, sol, model.num_states)
        policy = extend_ultimately_stationary(rules, tail)
        x = model.initial_state
        verdict = check_feasibility(policy, model, None, Mode.ORIGINAL, tol)
        cert = rs_cost_infinite(policy, model.objective_cost, model, certify_tol)[x]
        report.optimal_value = sol.objective_value
        report.policy = policy
        report.feasibility = verdict
        report.eps_feasibility = max(0.0, verdict.max_violation) if verdict.slacks else 0.0
        report.certified_objective = (cert.value, cert.radius)
        report.extraction_gap = abs(float(rs_cost_finite(policy, model.objective_cost, T, model)[x])
                                    - sol.objective_value)
        stats["lp_residual"] = sol.max_residual
    stats["wall_time"] = time.perf_counter() - t0
    return report
