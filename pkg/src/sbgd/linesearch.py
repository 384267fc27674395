"""Backtracking line search with a mass-scaled Armijo fraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LineSearchError, ParameterError
from .objectives import Objective


@dataclass(frozen=True)
class LineSearchOutcome:
    h: float
    shrink_count: int
    armijo_lhs: float
    armijo_rhs: float
    h0: float


def initial_step(L: float, lambda_eff: float) -> float:
    """Largest step ``(2 / L) * (1 - lambda_eff)`` guaranteed admissible for an L-smooth F."""
    if not L > 0:
        raise ParameterError(f"L must be positive, got {L}")
    if not 0 <= lambda_eff < 1:
        raise ParameterError(f"effective Armijo fraction must lie in [0, 1), got {lambda_eff}")
    return 2.0 / L * (1.0 - lambda_eff)


def backtrack(x, lambda_eff: float, gamma: float, objective: Objective, L: float,
              max_shrinks: int = 200, *, L_exact: bool = False,
              fx: Optional[float] = None, grad: Optional[np.ndarray] = None) -> LineSearchOutcome:
    """Shrink ``h`` from ``initial_step(L, lambda_eff)`` by ``gamma`` until

        F(x - h g) <= F(x) - lambda_eff * h * |g|^2

    holds (equality accepts).  A non-finite trial value counts as a failure.
    ``fx`` and ``grad`` may be passed in to skip re-evaluation at ``x``.

    With ``L_exact`` the accepted step is asserted to be at least
    ``gamma * h0``; this only holds when ``L`` really bounds the Hessian.
    """
    if not 0 < gamma < 1:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    x = np.asarray(x, dtype=float)
    h0 = initial_step(L, lambda_eff)
    if fx is None:
        fx = objective.value(x)
    g = objective.gradient(x) if grad is None else grad
    gg = float(np.dot(g, g))

    h = h0
    k = 0
    lhs = objective.value(x - h * g)
    rhs = fx - lambda_eff * h * gg
    while not lhs <= rhs:
        if k == max_shrinks:
            raise LineSearchError(
                f"no admissible step after {max_shrinks} shrinks at x={x.tolist()} "
                f"(|grad|^2={gg:.3e}, h={h:.3e})")
        h = gamma * h
        k += 1
        lhs = objective.value(x - h * g)
        rhs = fx - lambda_eff * h * gg

    if L_exact and h < gamma * h0:
        raise LineSearchError(
            f"accepted step {h!r} below the guaranteed bound {gamma * h0!r}; "
            f"L={L} does not bound the curvature")
    return LineSearchOutcome(h, k, lhs, rhs, h0)
