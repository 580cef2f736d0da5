"""
Level Sets

Distribution-function analytics of an eigenfunction: the level profile
t -> (|Omega_t|, perimeter of Omega_t, psi(t)), the isoperimetric comparison
perimeter Gamma*(t), and the integrals built from them.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from config import LEVEL_PROFILE_LEVELS, UNIT_BALL_VOLUME
from errors import GridError
from numerics.gridcore import ScalarField, perimeter_estimate, superlevel_set, volume

logger = logging.getLogger(__name__)

PSI_FLOOR = 1e-12


@dataclass(frozen=True)
class LevelRow:
    t: float
    volume: float
    perimeter: float
    psi: float
    gamma_star: float
    skipped: bool


@dataclass(frozen=True)
class LevelProfile:
    """
    Level profile on the uniform grid t_k = k T / levels, k < levels.

    psi is -d|Omega_t|/dt by central differences (forward at t = 0); rows
    with psi below PSI_FLOOR are kept but marked skipped.
    """

    dim: int
    T: float
    dt: float
    rows: List[LevelRow]

    @property
    def monotone(self) -> bool:
        volumes = [row.volume for row in self.rows]
        return all(b <= a for a, b in zip(volumes, volumes[1:]))

    @property
    def n_skipped(self) -> int:
        return sum(1 for row in self.rows if row.skipped)


def gamma_star(dim: int, measure: float) -> float:
    """Boundary measure of the ball with the given volume: n |B_1|^(1/n) V^(1 - 1/n)."""
    return dim * UNIT_BALL_VOLUME[dim] ** (1.0 / dim) * measure ** (1.0 - 1.0 / dim)


def level_profile(u: ScalarField, levels: int = LEVEL_PROFILE_LEVELS) -> LevelProfile:
    """
    Superlevel volumes and perimeters of u on a uniform t-grid below sup u.

    Raises:
        GridError: If u has no positive value
    """
    T = float(np.max(u.values))
    if not T > 0.0:
        raise GridError("Level profile of a field without positive values")
    dt = T / levels
    ts = dt * np.arange(levels + 1)
    sets = [superlevel_set(u, float(t)) if k < levels else None for k, t in enumerate(ts)]
    volumes = [volume(d) if d is not None and not d.empty else 0.0 for d in sets]

    rows = []
    for k in range(levels):
        if k == 0:
            psi = -(volumes[1] - volumes[0]) / dt
        else:
            psi = -(volumes[k + 1] - volumes[k - 1]) / (2.0 * dt)
        d = sets[k]
        perimeter = perimeter_estimate(d) if not d.empty else 0.0
        skipped = psi <= PSI_FLOOR
        rows.append(LevelRow(float(ts[k]), volumes[k], perimeter, psi, gamma_star(u.domain.dim, volumes[k]), skipped))
    profile = LevelProfile(u.domain.dim, T, dt, rows)
    if profile.n_skipped:
        logger.warning(f"{profile.n_skipped} of {levels} levels have psi ~ 0 and are skipped")
    return profile


def step1_value(profile: LevelProfile) -> float:
    """sum_t [P(Gamma(t))^2 - P(Gamma*(t))^2] dt / psi(t) over non-skipped levels."""
    return sum(
        (row.perimeter ** 2 - row.gamma_star ** 2) * profile.dt / row.psi for row in profile.rows if not row.skipped
    )


def coarea_sum(profile: LevelProfile) -> float:
    """sum_t P(Gamma(t))^2 dt / psi(t); approximates the Dirichlet energy of u by the coarea formula."""
    return sum(row.perimeter ** 2 * profile.dt / row.psi for row in profile.rows if not row.skipped)


def step2_min(profile: LevelProfile, eps: float) -> Optional[float]:
    """min over levels t <= sqrt(eps) of P(Gamma(t))^2 - P(Gamma*(t))^2; None when eps <= 0."""
    if eps <= 0.0:
        return None
    limit = math.sqrt(eps)
    gaps = [row.perimeter ** 2 - row.gamma_star ** 2 for row in profile.rows if row.t <= limit]
    return min(gaps) if gaps else None


def superlevel_lower_bound(dim: int, s: float, measure: float, delta: float, eps: float) -> float:
    """[1 - (2n / s) max(delta sqrt(m), eps)] m, the guaranteed measure of {u0 > delta}."""
    return (1.0 - (2.0 * dim / s) * max(delta * math.sqrt(measure), eps)) * measure
