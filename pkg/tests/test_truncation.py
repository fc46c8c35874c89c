import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import seeds
from crsmdp.fixtures import failure_model, mixed_model
from crsmdp.metric import MetricConfig, lipschitz_bound_discounted, lipschitz_bound_rs, policy_distance
from crsmdp.model import (
    ConstraintKind,
    ConstraintSpec,
    MarkovPolicy,
    MdpModel,
    cost_bound,
    counterexample_model,
    deterministic_rule,
    random_model,
    random_policy,
    uniform_rule,
)
from crsmdp.truncation import (
    HorizonError,
    Mode,
    check_feasibility,
    constraint_envelope,
    horizon_for_epsilon,
    is_eps_feasible,
    max_violation,
    truncation_bounds,
)

APPX = counterexample_model()
PHI = MarkovPolicy.stationary(uniform_rule(APPX))
ALWAYS_A1 = MarkovPolicy.stationary(deterministic_rule(1, 2, 0))


def one_state(constraints=(), cost=(1.0, 0.0)):
    return MdpModel(np.ones((1, 2, 1)), np.array([cost]), 0.5, 1.0, constraints=constraints)


# -- truncation_bounds -----------------------------------------------------------


@pytest.mark.parametrize("T", range(1, 9))
def test_counterexample_lower_bound_sum(T):
    tb = truncation_bounds(APPX, T, Mode.LOWER)
    assert sum(tb.bounds) == pytest.approx(2 - 0.5 ** (T - 2), abs=1e-14)
    assert all(e.horizon == T for e in tb.constraints)


def test_zero_cost_model_bounds_unchanged():
    spec = ConstraintSpec(ConstraintKind.RS_INF, np.zeros((1, 2)), 1.3)
    spec2 = ConstraintSpec(ConstraintKind.DISCOUNTED_INF, np.zeros((1, 2)), 0.2)
    model = one_state((spec, spec2), cost=(0.0, 0.0))
    for T in (1, 5, 30):
        for mode in Mode:
            assert truncation_bounds(model, T, mode).bounds == [1.3, 0.2]


def test_rs_upper_bound_substitution():
    model = one_state((ConstraintSpec(ConstraintKind.RS_INF, np.array([[1.0, 0.0]]), 1.0),))
    tb = truncation_bounds(model, 2, Mode.UPPER)
    assert tb.bounds[0] == pytest.approx(math.exp(0.5), rel=1e-15)
    assert truncation_bounds(model, 2, Mode.LOWER).bounds[0] == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_finite_constraints_keep_bounds_and_horizons():
    model = mixed_model(3)
    tb = truncation_bounds(model, 4, Mode.LOWER)
    for e in tb.constraints:
        if e.spec.kind.is_finite:
            assert e.bound == e.spec.bound and e.horizon == e.spec.horizon


def test_horizon_below_finite_constraint_rejected():
    model = mixed_model(3)
    with pytest.raises(HorizonError, match="horizon below finite-constraint horizon"):
        truncation_bounds(model, 2, Mode.UPPER)
    with pytest.raises(HorizonError):
        check_feasibility(PHI, APPX, None, Mode.LOWER)


@pytest.mark.parametrize("seed", range(5))
def test_sandwich_and_monotone_gaps(seed):
    model = mixed_model(seed)
    b = cost_bound(model)
    prev = None
    for T in range(3, 30):
        lo = truncation_bounds(model, T, Mode.LOWER).bounds
        up = truncation_bounds(model, T, Mode.UPPER).bounds
        orig = [c.bound for c in model.constraints]
        env = [max(b.K * model.beta**T, c.bound * b.K_T_minus_one(T)) for c in model.constraints]
        gaps = []
        for lb, o, ub, e in zip(lo, orig, up, env):
            assert lb <= o <= ub
            # the upper RS gap equals its envelope exactly, so allow subtraction rounding
            assert o - lb <= e + 1e-14 and ub - o <= e + 1e-14
            gaps.append(max(o - lb, ub - o))
        if prev is not None:
            assert all(g <= p for g, p in zip(gaps, prev))
        prev = gaps


# -- max_violation / feasibility -----------------------------------------------------


def test_h_phi_is_zero():
    assert abs(max_violation(PHI, APPX)) <= 1e-12


def test_h_deterministic_a1_is_one():
    assert max_violation(ALWAYS_A1, APPX) == pytest.approx(1.0, abs=1e-12)


def test_h_unconstrained_is_minus_inf(rng):
    model = random_model(rng, 2, 2)
    assert max_violation(random_policy(rng, 2, 2), model) == -math.inf


def test_phi_feasible_for_original():
    v = check_feasibility(PHI, APPX)
    assert v.feasible
    assert len(v.slacks) == 2 and all(abs(s) <= 1e-12 for s in v.slacks)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_counterexample_lower_always_infeasible(seed):
    rng = np.random.default_rng(seed)
    pol = random_policy(rng, 1, 2)
    for T in range(1, 9):
        assert not check_feasibility(pol, APPX, T, Mode.LOWER).feasible


def test_unconstrained_feasible_every_mode(rng):
    model = random_model(rng, 2, 2)
    pol = random_policy(rng, 2, 2)
    for mode in Mode:
        v = check_feasibility(pol, model, 3, mode)
        assert v.feasible and v.slacks == ()
    assert is_eps_feasible(pol, model, 0.01)


def test_eps_feasibility_examples():
    assert is_eps_feasible(PHI, APPX, 0.01)
    assert not is_eps_feasible(ALWAYS_A1, APPX, 0.5)
    assert is_eps_feasible(ALWAYS_A1, APPX, 1.1)
    with pytest.raises(ValueError):
        is_eps_feasible(PHI, APPX, 0.0)


def test_verdict_invariant(rng):
    model = failure_model()
    for _ in range(30):
        pol = random_policy(rng, 2, 2)
        v = check_feasibility(pol, model, 5, Mode.UPPER)
        assert v.feasible == (v.max_violation <= 1e-9)
        assert v.max_violation == -min(v.slacks)


# -- horizon_for_epsilon ----------------------------------------------------------


def test_horizon_for_epsilon_examples():
    assert horizon_for_epsilon(one_state(cost=(0.0, 0.0)), 0.1) == 1
    # beta = 1/2, K = 2, gamma = 1: the discounted condition needs T >= 6, the RS one T >= 9
    model = one_state()
    assert cost_bound(model).K == 2.0
    assert horizon_for_epsilon(model, 0.1) == 9
    assert horizon_for_epsilon(model, 1e6) == 1


def test_horizon_for_epsilon_cap():
    with pytest.raises(HorizonError, match="cap exceeded"):
        horizon_for_epsilon(one_state(), 1e-9, max_horizon=5)


def test_horizon_for_epsilon_is_smallest():
    model = one_state()
    for eps in (0.3, 0.05, 1e-3, 1e-6):
        T = horizon_for_epsilon(model, eps)
        assert 2 * constraint_envelope(model, T) <= eps
        if T > 1:
            assert 2 * constraint_envelope(model, T - 1) > eps


# -- nesting ----------------------------------------------------------------------


def _nesting_case(model, pol, T):
    lo_T = check_feasibility(pol, model, T, Mode.LOWER).feasible
    lo_T1 = check_feasibility(pol, model, T + 1, Mode.LOWER).feasible
    orig = check_feasibility(pol, model, None, Mode.ORIGINAL).feasible
    up_T = check_feasibility(pol, model, T, Mode.UPPER).feasible
    up_T1 = check_feasibility(pol, model, T + 1, Mode.UPPER).feasible
    if lo_T:
        assert lo_T1
    if lo_T1:
        assert orig
    if orig:
        assert up_T1
    if up_T1:
        assert up_T
    return lo_T, orig, up_T


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_nesting_mixed_model(seed):
    rng = np.random.default_rng(seed)
    model = mixed_model(int(rng.integers(0, 5)))
    pol = random_policy(rng, 2, 2, 3)
    _nesting_case(model, pol, int(rng.integers(3, 9)))


# -- continuity of h ----------------------------------------------------------------


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_h_continuity(seed):
    rng = np.random.default_rng(seed)
    full = mixed_model(int(rng.integers(0, 5)))
    # the infinite-horizon RS constraint has no finite Lipschitz constant in this metric
    model = full.with_constraints([c for c in full.constraints if c.kind is not ConstraintKind.RS_INF])
    cfg = MetricConfig.default(model.beta)
    b = cost_bound(model)
    L = 0.0
    for c in model.constraints:
        if c.kind is ConstraintKind.DISCOUNTED_INF:
            L += lipschitz_bound_discounted(math.inf, b, model.beta, cfg)
        elif c.kind is ConstraintKind.DISCOUNTED_FIN:
            L += lipschitz_bound_discounted(c.horizon, b, model.beta, cfg)
        else:
            L += lipschitz_bound_rs(c.horizon, b, model.beta, model.gamma, cfg)
    p, q = random_policy(rng, 2, 2, 3), random_policy(rng, 2, 2, 3)
    dh = abs(max_violation(p, model) - max_violation(q, model))
    assert dh <= L * policy_distance(p, q, cfg) + 1e-12
