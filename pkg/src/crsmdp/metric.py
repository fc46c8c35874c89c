"""Product-topology metric on Markov policies and the matching Lipschitz constants."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CostBounds, MarkovPolicy


@dataclass(frozen=True)
class MetricConfig:
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (beta, 1)")

    @classmethod
    def default(cls, beta: float) -> "MetricConfig":
        return cls((1.0 + beta) / 2.0)

    def validate(self, beta: float) -> None:
        if not beta < self.delta < 1.0:
            raise ValueError(f"delta={self.delta} must lie strictly inside (beta={beta}, 1)")


def rule_distance(d, f) -> float:
    """Induced infinity norm of d - f (max absolute row sum)."""
    d, f = np.asarray(d, dtype=float), np.asarray(f, dtype=float)
    if d.shape != f.shape:
        raise ValueError(f"dimension mismatch: {d.shape} vs {f.shape}")
    return float(np.max(np.abs(d - f).sum(axis=1)))


def policy_distance(p1: MarkovPolicy, p2: MarkovPolicy, cfg: MetricConfig) -> float:
    if p1.shape != p2.shape:
        raise ValueError(f"dimension mismatch: {p1.shape} vs {p2.shape}")
    k = max(len(p1.prefix), len(p2.prefix))
    best = 0.0
    # epochs >= k all use the tails; delta^t is decreasing so epoch k dominates them
    for t in range(k + 1):
        best = max(best, cfg.delta**t * rule_distance(p1.rule(t), p2.rule(t)))
    return best


def lipschitz_bound_discounted(T, bounds: CostBounds, beta: float, cfg: MetricConfig) -> float:
    """Lipschitz constant of the T-horizon (or infinite, T=math.inf) discounted cost in mu."""
    delta, K = cfg.delta, bounds.K
    if math.isinf(T):
        return K * delta / (delta - beta)
    return K * (delta**T - beta**T) / (delta ** (T - 1) * (delta - beta))


def lipschitz_bound_rs(T: int, bounds: CostBounds, beta: float, gamma: float,
                       cfg: MetricConfig) -> float:
    delta = cfg.delta
    return delta ** (-(T - 1)) / (1.0 - delta) * math.exp(abs(gamma) * bounds.K * (1 - beta**T))
