"""Benchmark objectives, gradient checks, Lipschitz estimation and a grid oracle.

Every objective works on arrays whose last axis holds the coordinates, so the
same callable serves single points (shape ``(d,)``) and whole grids.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .core import ParameterError, SBGDError


class OracleResourceError(SBGDError):
    pass


@dataclass(frozen=True)
class Objective:
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    L_hint: Optional[float] = None
    L_exact: bool = False
    known_argmin: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return len(self.lower)

    def value(self, x) -> float:
        if type(x) is not np.ndarray:
            x = np.asarray(x, dtype=float)
        return float(self.f(x))

    def gradient(self, x) -> np.ndarray:
        if type(x) is not np.ndarray:
            x = np.asarray(x, dtype=float)
        return np.asarray(self.grad(x), dtype=float)


@dataclass(frozen=True)
class OracleResult:
    argmin: np.ndarray
    f_min: float
    grid_resolution: float


def _box(lo, hi, d):
    return np.full(d, float(lo)), np.full(d, float(hi))


# -- paper example: exp(sin(2x^2)) + (x - pi/2)^2 / 10 on [-3, 3] -------------

def _paper_f(x):
    t = x[..., 0]
    return np.exp(np.sin(2 * t**2)) + 0.1 * (t - np.pi / 2) ** 2


def _paper_grad(x):
    t = x[..., 0]
    s = 2 * t**2
    return (4 * t * np.cos(s) * np.exp(np.sin(s)) + 0.2 * (t - np.pi / 2))[..., None]


def paper_objective() -> Objective:
    lo, hi = _box(-3.0, 3.0, 1)
    return Objective("paper-f", _paper_f, _paper_grad, lo, hi)


# -- chirp-like signal (1.5t - 2)^2 cos(30 pi + (3 pi t)^2) on [0, 2] ----------

_W = 3 * np.pi


def _signal_f(x):
    t = x[..., 0]
    return (1.5 * t - 2) ** 2 * np.cos(30 * np.pi + (_W * t) ** 2)


def _signal_grad(x):
    t = x[..., 0]
    a = 1.5 * t - 2
    u = 30 * np.pi + (_W * t) ** 2
    return (3 * a * np.cos(u) - a**2 * np.sin(u) * 2 * _W**2 * t)[..., None]


def signal_objective() -> Objective:
    lo, hi = _box(0.0, 2.0, 1)
    return Objective("signal-s", _signal_f, _signal_grad, lo, hi)


# -- d-dimensional test functions ---------------------------------------------

def _quad_f(x):
    return np.sum(x**2, axis=-1)


def _quad_grad(x):
    return 2 * x


def quadratic_objective(d: int = 1) -> Objective:
    if d < 1:
        raise ParameterError(f"dimension must be positive, got {d}")
    lo, hi = _box(-5.0, 5.0, d)
    return Objective(f"quadratic-{d}", _quad_f, _quad_grad, lo, hi,
                     L_hint=2.0, L_exact=True, known_argmin=np.zeros(d))


def _rastrigin_f(x):
    d = x.shape[-1]
    return 10.0 * d + np.sum(x**2 - 10 * np.cos(2 * np.pi * x), axis=-1)


def _rastrigin_grad(x):
    return 2 * x + 20 * np.pi * np.sin(2 * np.pi * x)


def rastrigin_objective(d: int = 2) -> Objective:
    if d < 1:
        raise ParameterError(f"dimension must be positive, got {d}")
    lo, hi = _box(-5.12, 5.12, d)
    # Hessian is diagonal with entries 2 + 40 pi^2 cos(2 pi x_k)
    return Objective(f"rastrigin-{d}", _rastrigin_f, _rastrigin_grad, lo, hi,
                     L_hint=2 + 40 * np.pi**2, L_exact=True, known_argmin=np.zeros(d))


def get_objective(name: str) -> Objective:
    """Resolve ``paper-f``, ``signal-s``, ``quadratic-<d>`` or ``rastrigin-<d>``."""
    if name == "paper-f":
        return paper_objective()
    if name == "signal-s":
        return signal_objective()
    m = re.fullmatch(r"(quadratic|rastrigin)-(\d+)", name)
    if m:
        d = int(m.group(2))
        return quadratic_objective(d) if m.group(1) == "quadratic" else rastrigin_objective(d)
    raise ParameterError(f"unknown objective {name!r}")


OBJECTIVE_NAMES = ("paper-f", "signal-s", "quadratic-d", "rastrigin-d")


# -- utilities ----------------------------------------------------------------

def finite_diff_gradient(objective: Objective, x, h: float = 1e-6) -> np.ndarray:
    if not h > 0:
        raise ParameterError(f"finite-difference step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (objective.value(x + e) - objective.value(x - e)) / (2 * h)
    return g


def gradient_check(objective: Objective, n_points: int = 100, seed: int = 0,
                   step: float = 1e-6) -> float:
    """Worst relative mismatch between analytic and central-difference gradients.

    Points are drawn uniformly inside the box; the difference step is
    ``step * max(1, |x_k|)`` per coordinate and errors are scaled by
    ``max(1, |analytic|)``.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        x = rng.uniform(objective.lower, objective.upper)
        g = objective.gradient(x)
        for k in range(x.size):
            h = step * max(1.0, abs(x[k]))
            e = np.zeros_like(x)
            e[k] = h
            fd = (objective.value(x + e) - objective.value(x - e)) / (2 * h)
            worst = max(worst, abs(g[k] - fd) / max(1.0, abs(g[k])))
    return worst


def estimate_lipschitz(objective: Objective, samples: int = 200, seed: int = 0,
                       safety: float = 1.2) -> float:
    """Sampled bound on ``|grad F(x) - grad F(y)| / |x - y|`` over the box."""
    if samples < 2:
        raise ParameterError(f"need at least 2 samples, got {samples}")
    width = objective.upper - objective.lower
    if np.any(width <= 0):
        raise ParameterError("objective domain has zero volume")
    rng = np.random.default_rng(seed)
    x = rng.uniform(objective.lower, objective.upper, size=(samples, objective.dim))
    g = np.asarray(objective.grad(x), dtype=float)
    dx = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    dg = np.linalg.norm(g[:, None, :] - g[None, :, :], axis=-1)
    mask = dx > 0
    ratio = float(np.max(dg[mask] / dx[mask])) if mask.any() else 0.0
    return max(safety * ratio, 1e-12)


def with_estimated_lipschitz(objective: Objective, samples: int = 200, seed: int = 0) -> Objective:
    return replace(objective, L_hint=estimate_lipschitz(objective, samples, seed), L_exact=False)


MAX_GRID_POINTS = 10**8


def grid_oracle(objective: Objective, resolution: float = 1e-4) -> OracleResult:
    """Exhaustive grid scan of a 1-D or 2-D box, refined locally to 1e-10."""
    if not resolution > 0:
        raise ParameterError(f"resolution must be positive, got {resolution}")
    d = objective.dim
    if d not in (1, 2):
        raise ParameterError(f"grid oracle supports 1-D and 2-D domains, got d={d}")
    counts = [int(math.ceil((hi - lo) / resolution)) + 1
              for lo, hi in zip(objective.lower, objective.upper)]
    if math.prod(counts) > MAX_GRID_POINTS:
        raise OracleResourceError(f"grid of {math.prod(counts)} points exceeds {MAX_GRID_POINTS}")
    axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(objective.lower, objective.upper, counts)]

    if d == 1:
        pts = axes[0][:, None]
        vals = np.asarray(objective.f(pts))
        k = int(np.argmin(vals))
        best_x, best_f = pts[k].copy(), float(vals[k])
    else:
        # scan row by row to bound memory
        best_f, best_x = np.inf, None
        for x0 in axes[0]:
            row = np.column_stack([np.full(counts[1], x0), axes[1]])
            vals = np.asarray(objective.f(row))
            k = int(np.argmin(vals))
            if vals[k] < best_f:
                best_f, best_x = float(vals[k]), row[k].copy()

    lo = np.maximum(best_x - resolution, objective.lower)
    hi = np.minimum(best_x + resolution, objective.upper)
    if d == 1:
        res = optimize.minimize_scalar(lambda t: objective.value([t]), bounds=(lo[0], hi[0]),
                                       method="bounded", options={"xatol": 1e-10})
        cand = np.array([res.x])
    else:
        res = optimize.minimize(objective.value, best_x, jac=objective.gradient,
                                method="L-BFGS-B", bounds=list(zip(lo, hi)),
                                options={"ftol": 1e-15, "gtol": 1e-12})
        cand = np.asarray(res.x, dtype=float)
    f_cand = objective.value(cand)
    if f_cand < best_f:
        best_x, best_f = cand, f_cand
    return OracleResult(best_x, best_f, resolution)


def reference_minimum(objective: Objective, resolution: Optional[float] = None) -> OracleResult:
    """Ground-truth minimizer: the known one when available, else the grid oracle."""
    if objective.known_argmin is not None:
        x = np.asarray(objective.known_argmin, dtype=float)
        return OracleResult(x, objective.value(x), 0.0)
    if resolution is None:
        resolution = 1e-4 if objective.dim == 1 else 1e-2
    return grid_oracle(objective, resolution)
