"""Domain types and the mass algebra shared by the rest of the package."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np


class SBGDError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SBGDError, ValueError):
    pass


class InvalidSwarmError(SBGDError):
    pass


class LineSearchError(SBGDError, RuntimeError):
    """Backtracking failed to find an admissible step within its shrink budget."""


INIT_SCHEMES = ("uniform-random", "equidistant", "left-cluster")
VARIANTS = ("basic", "tolerance", "baseline")


def psi(q, m_tilde):
    """Step-scaling weight ``m_tilde ** q`` for a relative mass in [0, 1]."""
    if q <= 0:
        raise ParameterError(f"q must be positive, got {q}")
    m = np.asarray(m_tilde, dtype=float)
    if np.any(m < 0) or np.any(m > 1):
        raise ParameterError(f"relative mass outside [0, 1]: {m_tilde}")
    out = np.power(m, q)
    return float(out) if out.ndim == 0 else out


def phi(p, eta):
    """Mass-transition fraction ``eta ** p`` for a relative height in [0, 1]."""
    if p <= 0:
        raise ParameterError(f"p must be positive, got {p}")
    e = np.asarray(eta, dtype=float)
    if np.any(e < 0) or np.any(e > 1):
        raise ParameterError(f"relative height outside [0, 1]: {eta}")
    out = np.power(e, p)
    return float(out) if out.ndim == 0 else out


def relative_mass(mass: float, m_plus: float) -> float:
    if m_plus <= 0:
        raise InvalidSwarmError("no active mass in the swarm")
    if mass < 0 or mass > m_plus:
        raise ParameterError(f"mass {mass} outside [0, {m_plus}]")
    return mass / m_plus


@dataclass
class SBGDParams:
    """Tunables of a run.

    ``L=None`` means "take it from the objective": its exact constant when it
    carries one, otherwise a sampled estimate.  ``max_iterations=None``
    defaults to ``10 * J``.
    """

    J: int = 10
    p: float = 1.0
    q: float = 1.0
    lam: float = 0.2
    gamma: float = 0.9
    L: Optional[float] = None
    L_exact: bool = False
    tolm: float = 1e-4
    tolmerge: float = 1e-3
    tolres: float = 1e-4
    max_iterations: Optional[int] = None
    max_shrinks: int = 200
    init_scheme: str = "uniform-random"
    seed: int = 0
    variant: str = "basic"

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise ParameterError(f"J must be a positive integer, got {self.J}")
        self.J = int(self.J)
        for name in ("p", "q"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("lam", "gamma"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ParameterError(f"{name} must lie in (0, 1), got {v}")
        if self.L is not None and not self.L > 0:
            raise ParameterError(f"L must be positive, got {self.L}")
        for name in ("tolm", "tolmerge", "tolres"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_iterations is None:
            self.max_iterations = 10 * self.J
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        self.max_iterations = int(self.max_iterations)
        if self.max_shrinks < 1:
            raise ParameterError(f"max_shrinks must be positive, got {self.max_shrinks}")
        if self.init_scheme not in INIT_SCHEMES:
            raise ParameterError(f"init_scheme must be one of {INIT_SCHEMES}, got {self.init_scheme!r}")
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        self.seed = int(self.seed)


@dataclass(frozen=True)
class Agent:
    agent_id: int
    position: np.ndarray
    mass: float
    active: bool


class Swarm:
    """Agents stored column-wise: positions ``(J, d)``, masses and flags ``(J,)``.

    Inactive agents stay in the arrays with zero mass so ids are stable.
    ``f_values`` caches the objective at the current positions.
    """

    def __init__(self, positions, masses, f_values, active=None, iteration: int = 0):
        self.positions = np.array(positions, dtype=float)
        if self.positions.ndim == 1:
            self.positions = self.positions[:, None]
        n = self.positions.shape[0]
        self.masses = np.array(masses, dtype=float).reshape(n)
        self.f_values = np.array(f_values, dtype=float).reshape(n)
        self.active = (
            self.masses > 0 if active is None else np.array(active, dtype=bool).reshape(n)
        )
        self.iteration = iteration
        self.last_move = float("inf")

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    @property
    def agents(self) -> list[Agent]:
        return list(iter(self))

    def __iter__(self) -> Iterator[Agent]:
        for i in range(self.size):
            yield Agent(i, self.positions[i].copy(), float(self.masses[i]), bool(self.active[i]))

    def active_ids(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def deactivate(self, i: int) -> None:
        self.masses[i] = 0.0
        self.active[i] = False

    def minimizer(self) -> int:
        """Active agent with the lowest objective value, lowest id on ties."""
        ids = self.active_ids()
        if ids.size == 0:
            raise InvalidSwarmError("swarm has no active agents")
        return int(ids[np.argmin(self.f_values[ids])])

    def heaviest(self) -> int:
        ids = self.active_ids()
        if ids.size == 0:
            raise InvalidSwarmError("swarm has no active agents")
        return int(ids[np.argmax(self.masses[ids])])

    def copy(self) -> "Swarm":
        return Swarm(self.positions, self.masses, self.f_values, self.active, self.iteration)


def total_mass(swarm: Swarm) -> float:
    return float(swarm.masses[swarm.active].sum())


@dataclass
class TrajectoryRecord:
    iteration: int
    positions: np.ndarray
    masses: np.ndarray
    f_values: np.ndarray
    active: np.ndarray
    minimizer_index: int
    heaviest_index: int
    f_min: float
    f_max: float

    @classmethod
    def snapshot(cls, swarm: Swarm) -> "TrajectoryRecord":
        ids = swarm.active_ids()
        fa = swarm.f_values[ids]
        return cls(
            iteration=swarm.iteration,
            positions=swarm.positions.copy(),
            masses=swarm.masses.copy(),
            f_values=swarm.f_values.copy(),
            active=swarm.active.copy(),
            minimizer_index=swarm.minimizer(),
            heaviest_index=swarm.heaviest(),
            f_min=float(fa.min()),
            f_max=float(fa.max()),
        )

    def total_mass(self) -> float:
        return float(self.masses[self.active].sum())


@dataclass
class RunResult:
    solution: np.ndarray
    f_solution: float
    iterations_used: int
    termination: str
    trajectory: list[TrajectoryRecord] = field(default_factory=list)
    seed: int = 0
