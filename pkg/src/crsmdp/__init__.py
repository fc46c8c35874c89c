"""Constrained risk-sensitive MDPs: truncation, exact evaluation and an occupation-measure LP."""
from .augmented import (
    AugmentedChain,
    SolveReport,
    build_augmented_chain,
    build_occupation_lp,
    extend_ultimately_stationary,
    extract_policy,
    solve_crsmdp,
)
from .evaluation import (
    CertifiedValue,
    QFactors,
    discounted_cost_finite,
    discounted_cost_infinite,
    expected_cost_vector,
    rs_cost_finite,
    rs_cost_infinite,
    rs_q_factors,
    transition_matrix,
)
from .metric import (
    MetricConfig,
    lipschitz_bound_discounted,
    lipschitz_bound_rs,
    policy_distance,
    rule_distance,
)
from .model import (
    ConstraintKind,
    ConstraintSpec,
    CostBounds,
    MarkovPolicy,
    MdpModel,
    cost_bound,
    counterexample_model,
    uniform_rule,
    validate_model,
)
from .simplex import LpProblem, LpSolution, LpStatus, solve_lp
from .truncation import (
    FeasibilityVerdict,
    Mode,
    TruncatedBounds,
    check_feasibility,
    horizon_for_epsilon,
    is_eps_feasible,
    max_violation,
    truncation_bounds,
)

__version__ = "0.1.0"
