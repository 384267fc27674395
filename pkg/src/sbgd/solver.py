"""Swarm-based gradient descent drivers."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from . import linesearch
from .communication import HeightProfile, merge_close_agents, redistribute_mass, relative_heights
from .core import (
    InvalidSwarmError,
    ParameterError,
    RunResult,
    SBGDParams,
    Swarm,
    TrajectoryRecord,
    psi,
    relative_mass,
)
from .objectives import Objective, estimate_lipschitz

# on_step(agent_id, x, lambda_eff, outcome) is called for every accepted line search
StepObserver = Callable[[int, np.ndarray, float, "linesearch.LineSearchOutcome"], None]

STALL_MOVE = 1e-15


def resolve_lipschitz(params: SBGDParams, objective: Objective) -> SBGDParams:
    """Fill in ``params.L`` from the objective, estimating it when unknown."""
    if params.L is not None:
        return params
    if objective.L_hint is not None:
        return replace(params, L=objective.L_hint, L_exact=objective.L_exact)
    return replace(params, L=estimate_lipschitz(objective, seed=params.seed), L_exact=False)


def initial_positions(params: SBGDParams, objective: Objective) -> np.ndarray:
    lo, hi = objective.lower, objective.upper
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ParameterError("initialization needs a bounded box")
    J = params.J
    if params.init_scheme == "uniform-random":
        rng = np.random.default_rng(params.seed)
        return rng.uniform(lo, hi, size=(J, objective.dim))
    if params.init_scheme == "left-cluster":
        hi = lo + 0.1 * (hi - lo)
    # evenly spaced along the box diagonal, endpoints included
    t = np.linspace(0.0, 1.0, J)
    return lo + t[:, None] * (hi - lo)


def init_swarm(params: SBGDParams, objective: Objective) -> Swarm:
    x = initial_positions(params, objective)
    f = np.array([objective.value(xi) for xi in x])
    return Swarm(x, np.full(params.J, 1.0 / params.J), f)


def _descend(swarm: Swarm, i: int, lambda_eff: float, params: SBGDParams,
             objective: Objective, on_step: Optional[StepObserver]) -> float:
    """One backtracked gradient step for agent ``i``; returns the distance moved."""
    x = swarm.positions[i]
    g = objective.gradient(x)
    out = linesearch.backtrack(x, lambda_eff, params.gamma, objective, params.L,
                               params.max_shrinks, L_exact=params.L_exact,
                               fx=swarm.f_values[i], grad=g)
    if on_step is not None:
        on_step(i, x.copy(), lambda_eff, out)
    delta = out.h * g
    swarm.positions[i] = x - delta
    swarm.f_values[i] = out.armijo_lhs
    return float(np.linalg.norm(delta))


def step(swarm: Swarm, params: SBGDParams, objective: Objective, *,
         cull: bool = False, on_step: Optional[StepObserver] = None) -> HeightProfile:
    """Advance the swarm by one iteration: communicate, then move every active agent.

    With ``cull`` agents lighter than ``tolm / N`` (N = active count) hand
    their whole mass to the minimizer first.  Returns the height profile of
    the pre-step state.
    """
    if swarm.n_active < 2:
        raise InvalidSwarmError(f"a step needs two active agents, have {swarm.n_active}")
    if params.L is None:
        raise ParameterError("params.L is unresolved; call resolve_lipschitz first")
    profile = relative_heights(swarm)
    mask = None
    if cull:
        mask = swarm.active & (swarm.masses < params.tolm / swarm.n_active)
    redistribute_mass(swarm, profile, params.p, cull=mask)

    ids = swarm.active_ids()
    m_plus = float(swarm.masses[ids].max())
    moved = 0.0
    for i in ids:
        lam_eff = params.lam * psi(params.q, relative_mass(swarm.masses[i], m_plus))
        moved = max(moved, _descend(swarm, int(i), lam_eff, params, objective, on_step))
    swarm.iteration += 1
    swarm.last_move = moved
    return profile


def _result(swarm: Swarm, i: int, termination: str, records, params) -> RunResult:
    return RunResult(
        solution=swarm.positions[i].copy(),
        f_solution=float(swarm.f_values[i]),
        iterations_used=swarm.iteration,
        termination=termination,
        trajectory=records,
        seed=params.seed,
    )


def _stalled(profile: HeightProfile, swarm: Swarm, streak: int) -> int:
    if profile.flat and swarm.last_move <= STALL_MOVE:
        return streak + 1
    return 0


def run_basic(params: SBGDParams, objective: Objective, *,
              on_step: Optional[StepObserver] = None) -> RunResult:
    """Eliminate the worst agent every iteration until one remains.

    The heaviest surviving agent is returned.  A single agent has nobody
    to communicate with, so J=1 falls back to plain backtracking descent.
    """
    params = resolve_lipschitz(params, objective)
    if params.J == 1:
        return _independent_descent(params, objective, on_step)
    swarm = init_swarm(params, objective)
    records = [TrajectoryRecord.snapshot(swarm)]
    termination = "max-iterations"
    streak = 0
    while swarm.n_active >= 2 and swarm.iteration < params.max_iterations:
        profile = step(swarm, params, objective, on_step=on_step)
        if not profile.flat:
            swarm.deactivate(profile.maximizer_index)
        records.append(TrajectoryRecord.snapshot(swarm))
        streak = _stalled(profile, swarm, streak)
        if streak >= 2:
            termination = "stalled"
            break
    if swarm.n_active == 1:
        termination = "single-agent"
    return _result(swarm, swarm.heaviest(), termination, records, params)


def run_tolerance(params: SBGDParams, objective: Objective, *,
                  on_step: Optional[StepObserver] = None) -> RunResult:
    """Cull light agents, merge near-duplicates, and stop on a small minimizer residual.

    The current minimizer is returned.
    """
    params = resolve_lipschitz(params, objective)
    swarm = init_swarm(params, objective)
    records = [TrajectoryRecord.snapshot(swarm)]
    termination = "max-iterations"
    streak = 0
    while swarm.n_active >= 2 and swarm.iteration < params.max_iterations:
        prev = swarm.positions[swarm.minimizer()].copy()
        profile = step(swarm, params, objective, cull=True, on_step=on_step)
        merge_close_agents(swarm, params.tolmerge)
        records.append(TrajectoryRecord.snapshot(swarm))
        res = float(np.linalg.norm(swarm.positions[swarm.minimizer()] - prev))
        if res < params.tolres:
            termination = "residual"
            break
        streak = _stalled(profile, swarm, streak)
        if streak >= 2:
            termination = "stalled"
            break
    else:
        if swarm.n_active == 1:
            termination = "single-agent"
    return _result(swarm, swarm.minimizer(), termination, records, params)


def _independent_descent(params: SBGDParams, objective: Objective,
                         on_step: Optional[StepObserver]) -> RunResult:
    swarm = init_swarm(params, objective)
    records = [TrajectoryRecord.snapshot(swarm)]
    termination = "max-iterations"
    lam_eff = params.lam * psi(params.q, 1.0)
    while swarm.iteration < params.max_iterations:
        moved = 0.0
        for i in range(swarm.size):
            moved = max(moved, _descend(swarm, i, lam_eff, params, objective, on_step))
        swarm.iteration += 1
        records.append(TrajectoryRecord.snapshot(swarm))
        if moved < params.tolres:
            termination = "residual"
            break
    return _result(swarm, swarm.minimizer(), termination, records, params)


def run_baseline(params: SBGDParams, objective: Objective, *,
                 on_step: Optional[StepObserver] = None) -> RunResult:
    """J independent backtracking descents with no mass exchange.

    Stops once no agent moves by ``tolres`` or more; returns the lowest agent.
    """
    params = resolve_lipschitz(params, objective)
    return _independent_descent(params, objective, on_step)


RUNNERS = {"basic": run_basic, "tolerance": run_tolerance, "baseline": run_baseline}


def run(params: SBGDParams, objective: Objective, **kwargs) -> RunResult:
    return RUNNERS[params.variant](params, objective, **kwargs)


# -- trajectory diagnostics ---------------------------------------------------

def minimizer_values(result: RunResult) -> np.ndarray:
    return np.array([r.f_min for r in result.trajectory])


def summability_partial_sums(result: RunResult, objective: Objective) -> np.ndarray:
    """Running sum of ``min(|g+|, |g-|, |g+| |g-|)^2`` over the trajectory.

    ``g-`` is the gradient at the minimizer and ``g+`` at the heaviest agent.
    """
    terms = []
    for r in result.trajectory:
        gm = float(np.linalg.norm(objective.gradient(r.positions[r.minimizer_index])))
        gp = float(np.linalg.norm(objective.gradient(r.positions[r.heaviest_index])))
        terms.append(min(gp, gm, gp * gm) ** 2)
    return np.cumsum(terms)


def height_range_ok(result: RunResult, f_star: float) -> bool:
    """Check ``max_j F_j - F_i <= max_i F_i^0 - F*`` on every record."""
    first = result.trajectory[0]
    M = float(first.f_values[first.active].max()) - f_star
    return all(r.f_max - r.f_min <= M for r in result.trajectory)
