"""Relative heights, mass transfer toward the minimizer, and agent merging."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InvalidSwarmError, Swarm, phi


@dataclass(frozen=True)
class HeightProfile:
    eta: np.ndarray  # NaN for inactive agents
    f_min: float
    f_max: float
    minimizer_index: int
    maximizer_index: int

    @property
    def flat(self) -> bool:
        return self.f_max == self.f_min


def find_active_extremes(swarm: Swarm) -> tuple[int, int, float, float]:
    """(minimizer, maximizer, f_min, f_max) over active agents, lowest id on ties."""
    ids = swarm.active_ids()
    if ids.size == 0:
        raise InvalidSwarmError("swarm has no active agents")
    f = swarm.f_values[ids]
    i_min = int(ids[np.argmin(f)])
    i_max = int(ids[np.argmax(f)])
    return i_min, i_max, float(swarm.f_values[i_min]), float(swarm.f_values[i_max])


def relative_heights(swarm: Swarm) -> HeightProfile:
    """Normalized heights ``(F_i - F_min) / (F_max - F_min)``; all zero for a flat swarm."""
    if swarm.n_active < 2:
        raise InvalidSwarmError(f"relative heights need two active agents, have {swarm.n_active}")
    i_min, i_max, f_min, f_max = find_active_extremes(swarm)
    eta = np.full(swarm.size, np.nan)
    act = swarm.active
    if f_max > f_min:
        eta[act] = (swarm.f_values[act] - f_min) / (f_max - f_min)
        # pin the endpoints against rounding
        eta[i_min] = 0.0
        eta[i_max] = 1.0
        np.clip(eta, 0.0, 1.0, out=eta)
    else:
        eta[act] = 0.0
    return HeightProfile(eta, f_min, f_max, i_min, i_max)


def redistribute_mass(swarm: Swarm, profile: HeightProfile, p: float,
                      cull: Optional[np.ndarray] = None) -> float:
    """Move ``phi_p(eta_i) * m_i`` from every active non-minimizer to the minimizer.

    Agents flagged in ``cull`` give up their whole mass.  Agents left with
    zero mass are deactivated.  Returns the total mass transferred.
    """
    i_min = profile.minimizer_index
    donors = swarm.active.copy()
    donors[i_min] = False
    frac = np.zeros(swarm.size)
    frac[donors] = phi(p, profile.eta[donors])
    if cull is not None:
        frac[np.asarray(cull, dtype=bool) & donors] = 1.0
    change = frac * swarm.masses
    swarm.masses[donors] -= change[donors]
    shed = float(change[donors].sum())
    swarm.masses[i_min] += shed
    for i in np.flatnonzero(swarm.active & (swarm.masses <= 0.0)):
        swarm.deactivate(int(i))
    return shed


def merge_close_agents(swarm: Swarm, tolmerge: float) -> int:
    """Fold together active agents closer than ``tolmerge``.

    Pairs are scanned greedily in ascending id order.  The member with the
    higher objective value (the later id on ties) is deactivated and its mass
    added to the survivor, which keeps its position.  Repeats until no close
    pair is left.  Returns the number of merges.
    """
    merges = 0
    changed = True
    while changed:
        changed = False
        for i in swarm.active_ids():
            if not swarm.active[i]:
                continue
            later = swarm.active.copy()
            later[: i + 1] = False
            cand = np.flatnonzero(later)
            if cand.size == 0:
                continue
            dist = np.linalg.norm(swarm.positions[cand] - swarm.positions[i], axis=1)
            for j in cand[dist < tolmerge]:
                if swarm.f_values[j] < swarm.f_values[i]:
                    keep, drop = int(j), int(i)
                else:
                    keep, drop = int(i), int(j)
                swarm.masses[keep] += swarm.masses[drop]
                swarm.deactivate(drop)
                merges += 1
                changed = True
                if drop == i:
                    break
    return merges
