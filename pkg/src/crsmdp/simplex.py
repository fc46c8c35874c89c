"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c.y  s.t.  A_eq y = b_eq,  A_ub y <= b_ub,  y >= 0``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-8
COST_TOL = 1e-10


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class NumericallyDegenerate(RuntimeError):
    pass


@dataclass
class LpProblem:
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    var_names: list[str] | None = None
    eq_names: list[str] | None = None
    ub_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq = np.zeros((0, n)) if self.A_eq is None else np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        self.A_ub = np.zeros((0, n)) if self.A_ub is None else np.asarray(self.A_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).ravel()
        if self.A_eq.shape[0] != self.b_eq.size or self.A_ub.shape[0] != self.b_ub.size:
            raise ValueError("row count of a constraint matrix does not match its rhs")
        for arr in (self.c, self.A_eq, self.b_eq, self.A_ub, self.b_ub):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")

    @property
    def num_vars(self) -> int:
        return self.c.size

    def residual(self, y) -> float:
        r = 0.0
        if self.b_eq.size:
            r = max(r, float(np.max(np.abs(self.A_eq @ y - self.b_eq))))
        if self.b_ub.size:
            r = max(r, float(np.max(self.A_ub @ y - self.b_ub)))
        if y.size:
            r = max(r, float(np.max(-y)))
        return max(r, 0.0)


@dataclass
class LpSolution:
    status: LpStatus
    y: np.ndarray | None = None
    objective_value: float = float("nan")
    max_residual: float = float("nan")
    pivots: int = 0
    stats: dict = field(default_factory=dict)


class _Tableau:
    def __init__(self, A, b, basis):
        m, ncol = A.shape
        self.T = np.zeros((m + 1, ncol + 1))
        self.T[:m, :ncol] = A
        self.T[:m, -1] = b
        self.basis = list(basis)
        self.pivots = 0

    @property
    def m(self):
        return self.T.shape[0] - 1

    def set_objective(self, cost):
        # reduced costs c_j - c_B B^-1 A_j with the tableau already in canonical form
        T = self.T
        T[-1, :] = 0.0
        T[-1, : cost.size] = cost
        for r, j in enumerate(self.basis):
            if j < cost.size and cost[j] != 0.0:
                T[-1, :] -= cost[j] * T[r, :]

    def pivot(self, r, j):
        T = self.T
        T[r, :] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r, :])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j
        self.pivots += 1

    def iterate(self, allowed: int) -> LpStatus:
        """Run Bland-rule pivots over columns < allowed until optimal or unbounded."""
        T = self.T
        m = self.m
        while True:
            rc = T[-1, :allowed]
            cand = np.flatnonzero(rc < -COST_TOL)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            j = int(cand[0])
            col = T[:m, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                if np.any(col > 0):
                    raise NumericallyDegenerate(
                        f"numerically degenerate: column {j} has only pivots below {PIVOT_TOL:g}"
                    )
                return LpStatus.UNBOUNDED
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(tied, key=lambda i: self.basis[i]))
            self.pivot(r, j)


def solve_lp(p: LpProblem) -> LpSolution:
    n = p.num_vars
    me, mu = p.b_eq.size, p.b_ub.size
    m = me + mu
    A = np.zeros((m, n + mu))
    A[:me, :n] = p.A_eq
    A[me:, :n] = p.A_ub
    A[me:, n:] = np.eye(mu)
    b = np.concatenate([p.b_eq, p.b_ub])
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)

    basis = [-1] * m
    for i in range(mu):
        if not flip[me + i]:
            basis[me + i] = n + i
    need_art = [r for r in range(m) if basis[r] < 0]
    nreal = n + mu
    art = np.zeros((m, len(need_art)))
    for k, r in enumerate(need_art):
        art[r, k] = 1.0
        basis[r] = nreal + k
    tab = _Tableau(np.hstack([A, art]), b, basis)
    stats = {"rows": m, "cols": nreal, "artificials": len(need_art)}

    if need_art:
        cost1 = np.zeros(nreal + len(need_art))
        cost1[nreal:] = 1.0
        tab.set_objective(cost1)
        status = tab.iterate(nreal + len(need_art))
        phase1 = -tab.T[-1, -1]
        if status is not LpStatus.OPTIMAL or phase1 > FEAS_TOL:
            return LpSolution(LpStatus.INFEASIBLE, pivots=tab.pivots, stats=stats)
        # drive zero-level artificials out of the basis; drop redundant rows
        r = 0
        while r < tab.m:
            if tab.basis[r] >= nreal:
                row = tab.T[r, :nreal]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
                else:
                    tab.T = np.delete(tab.T, r, axis=0)
                    del tab.basis[r]
                    continue
            r += 1
        tab.T = np.delete(tab.T, np.s_[nreal:-1], axis=1)

    cost2 = np.zeros(nreal)
    cost2[:n] = p.c
    tab.set_objective(cost2)
    status = tab.iterate(nreal)
    stats["pivots"] = tab.pivots
    if status is LpStatus.UNBOUNDED:
        return LpSolution(status, pivots=tab.pivots, stats=stats)

    x = np.zeros(nreal)
    for r, j in enumerate(tab.basis):
        x[j] = tab.T[r, -1]
    y = x[:n]
    y = np.where((y < 0) & (y > -1e-9), 0.0, y)
    return LpSolution(
        LpStatus.OPTIMAL,
        y=y,
        objective_value=float(p.c @ y),
        max_residual=p.residual(y),
        pivots=tab.pivots,
        stats=stats,
    )


def dump_lp_text(p: LpProblem) -> str:
    """Plain-text rendering for inspection; not meant to be parsed back."""
    names = p.var_names or [f"y{j}" for j in range(p.num_vars)]

    def expr(coefs):
        terms = [f"{v:+.17g} {names[j]}" for j, v in enumerate(coefs) if v != 0.0]
        return " ".join(terms) if terms else "0"

    lines = ["min", f"  obj: {expr(p.c)}", "st"]
    for i, (row, rhs) in enumerate(zip(p.A_eq, p.b_eq)):
        nm = p.eq_names[i] if p.eq_names else f"e{i}"
        lines.append(f"  {nm}: {expr(row)} = {rhs:.17g}")
    for i, (row, rhs) in enumerate(zip(p.A_ub, p.b_ub)):
        nm = p.ub_names[i] if p.ub_names else f"u{i}"
        lines.append(f"  {nm}: {expr(row)} <= {rhs:.17g}")
    lines.append("end")
    return "\n".join(lines) + "\n"
