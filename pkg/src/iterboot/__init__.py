"""Iterative synthetic-data bootstrapping: generate, reward-filter,
update — simulated exactly as specified and mirrored by closed-form
Gaussian analytics, so budget-allocation schedules can be compared
quantitatively."""

from .analytic import (
    MarginalLaw,
    PolicyEvaluation,
    brute_force_optimal,
    cost_curve,
    expected_final_reward,
    marginal,
    optimal_schedule,
    t_star,
    variance_floor,
)
from .engine import (
    AggregateTrace,
    CostModel,
    IterationRecord,
    RunConfig,
    RunTrace,
    monte_carlo,
    run,
    run_seed,
    select_batch,
)
from .gaussian import (
    ExpReward,
    GaussianModel,
    expected_reward,
    mle_update,
    optimal_reward,
    post_selection_params,
    reward,
    sample,
)
from .gdmodel import GaussianNll, GdUpdater, LossModel, check_gradient, gaussian_nll, gd_update
from .policy import (
    BatchConstant,
    BatchExponential,
    BatchLinear,
    Constant,
    Explicit,
    Exponential,
    Polynomial,
    Schedule,
    budget_matched_constant,
    budget_matched_linear,
    is_increasing,
    materialize,
    total_selected,
)

__version__ = "0.1.0"

__all__ = [
    "MarginalLaw",
    "PolicyEvaluation",
    "brute_force_optimal",
    "cost_curve",
    "expected_final_reward",
    "marginal",
    "optimal_schedule",
    "t_star",
    "variance_floor",
    "AggregateTrace",
    "CostModel",
    "IterationRecord",
    "RunConfig",
    "RunTrace",
    "monte_carlo",
    "run",
    "run_seed",
    "select_batch",
    "ExpReward",
    "GaussianModel",
    "expected_reward",
    "mle_update",
    "optimal_reward",
    "post_selection_params",
    "reward",
    "sample",
    "GaussianNll",
    "GdUpdater",
    "LossModel",
    "check_gradient",
    "gaussian_nll",
    "gd_update",
    "BatchConstant",
    "BatchExponential",
    "BatchLinear",
    "Constant",
    "Explicit",
    "Exponential",
    "Polynomial",
    "Schedule",
    "budget_matched_constant",
    "budget_matched_linear",
    "is_increasing",
    "materialize",
    "total_selected",
]
