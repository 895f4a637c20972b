"""Learning curves, learning-rate data and capacity expansion with endogenous learning."""

from .curves import (
    Component,
    Composite,
    CurveError,
    Diminishing,
    DomainError,
    Modified,
    OneFactor,
    Partial,
    Staged,
    TwoFactor,
    UnsupportedVariantError,
    component_costs,
    cumulative_cost,
    effective_learning_rate,
    unit_cost,
)
from .expansion import (
    ExpansionPlan,
    InfeasibleScenarioError,
    ScenarioConfig,
    TechnologySpec,
    compare_modes,
    solve_expansion,
    sweep_learning_rate,
)
from .fitting import ObservationSeries, bootstrap_ci, fit
from .milp import LinearProgram, MilpProblem, solve_lp, solve_milp
from .pwl import PwlPolicy, approx_error, build_breakpoints, eval_pwl

__version__ = "0.1.0"
