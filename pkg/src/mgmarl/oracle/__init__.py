from .cooperation import cooperation_probability
from .expectations import (
    baseline_zero_mean,
    exact_variance,
    expected_gradient,
    sample_estimator,
)
from .tabular import TabularPolicy, TabularSolution, check_identities, solve_tabular
from .trajectories import (
    EnumerationBoundExceeded,
    exact_objective_and_gradient,
    finite_difference_gradient,
    trajectory_count,
)

__all__ = [
    "EnumerationBoundExceeded",
    "TabularPolicy",
    "TabularSolution",
    "baseline_zero_mean",
    "check_identities",
    "cooperation_probability",
    "exact_objective_and_gradient",
    "exact_variance",
    "expected_gradient",
    "finite_difference_gradient",
    "sample_estimator",
    "solve_tabular",
    "trajectory_count",
]
