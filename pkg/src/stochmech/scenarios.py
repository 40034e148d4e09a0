"""Named simulation scenarios: initial state, drift pair, and initial sampler.

A scenario is a small picklable value object so that worker processes can
rebuild drift evaluators locally; everything derived from it is a pure
function of its fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import wavefunction as wf
from .errors import ConfigError

SCENARIO_KINDS = ("oscillator-ground", "free-gaussian", "grid-custom")


@dataclass(frozen=True)
class GaussianInitialSampler:
    """Exact sampler for a centered Gaussian |psi0|^2 with the given sigma."""

    sigma: float

    def __call__(self, rng: np.random.Generator) -> float:
        return self.sigma * rng.standard_normal()


@dataclass(frozen=True)
class GridInitialSampler:
    """Inverse-CDF sampler on the tabulated |psi0|^2."""

    x: np.ndarray
    cdf: np.ndarray

    def __call__(self, rng: np.random.Generator) -> float:
        return float(np.interp(rng.random(), self.cdf, self.x))


@dataclass(frozen=True)
class Scenario:
    kind: str
    nu: float
    t0: float = 0.0
    grid_extent: Tuple[float, float] = wf.DEFAULT_EXTENT
    grid_points: int = wf.DEFAULT_POINTS
    state_file: Optional[str] = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"scenario: unknown kind {self.kind!r}; "
                              f"expected one of {SCENARIO_KINDS}")
        if self.nu <= 0:
            raise ConfigError("nu: must be positive")

    @property
    def scenario_id(self) -> str:
        return self.kind

    def initial_state(self) -> wf.WaveState:
        if self.kind == "oscillator-ground":
            return wf.harmonic_ground_state(time=self.t0)
        if self.kind == "free-gaussian":
            return wf.free_gaussian_state(time=self.t0, t0=self.t0)
        if self.state_file is not None:
            return wf.read_state(self.state_file, time=self.t0)
        return wf.to_grid(wf.harmonic_ground_state(time=self.t0),
                          extent=self.grid_extent, points=self.grid_points)

    def drift_fields(self) -> Tuple[wf.DriftField, wf.DriftField]:
        """(interacting, free) drift pair; identical objects for the free
        scenario, where the coupling must be the identity map."""
        if self.kind == "oscillator-ground":
            interacting = wf.drift(wf.harmonic_ground_state(time=self.t0), self.nu)
            free = wf.drift(wf.free_gaussian_state(time=self.t0, t0=self.t0), self.nu)
            return interacting, free
        if self.kind == "free-gaussian":
            shared = wf.drift(wf.free_gaussian_state(time=self.t0, t0=self.t0), self.nu)
            return shared, shared
        state = self.initial_state()
        return wf.drift(state, self.nu), wf.free_drift_field_from_grid(state, self.nu)

    def initial_sampler(self):
        if self.kind in ("oscillator-ground", "free-gaussian"):
            return GaussianInitialSampler(sigma=math.sqrt(0.5))
        state = self.initial_state()
        prob = np.abs(state.amplitude) ** 2
        h = state.spacing
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (prob[1:] + prob[:-1]) * h)))
        cdf /= cdf[-1]
        return GridInitialSampler(x=state.grid, cdf=cdf)

    def target_density(self) -> wf.MomentumDensity:
        """Quantum momentum density of the t0 state (the distribution the
        extracted momentum samples must reproduce; contains no nu)."""
        return wf.momentum_density(self.initial_state(),
                                   extent=self.grid_extent, points=self.grid_points)
