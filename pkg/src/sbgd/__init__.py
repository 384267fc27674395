"""Swarm-based gradient descent for non-convex global minimization."""

from .communication import (
    HeightProfile,
    find_active_extremes,
    merge_close_agents,
    redistribute_mass,
    relative_heights,
)
from .core import (
    Agent,
    InvalidSwarmError,
    LineSearchError,
    ParameterError,
    RunResult,
    SBGDError,
    SBGDParams,
    Swarm,
    TrajectoryRecord,
    phi,
    psi,
    relative_mass,
    total_mass,
)
from .linesearch import LineSearchOutcome, backtrack, initial_step
from .objectives import (
    Objective,
    OracleResult,
    estimate_lipschitz,
    finite_diff_gradient,
    get_objective,
    grid_oracle,
    paper_objective,
    quadratic_objective,
    rastrigin_objective,
    signal_objective,
)
from .solver import init_swarm, run, run_baseline, run_basic, run_tolerance, step

__version__ = "0.1.0"
