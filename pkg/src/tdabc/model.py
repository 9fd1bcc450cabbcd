"""Data types and prior densities of the hierarchical introduction/spread model.

Priors: ``lambda_g ~ Exponential(1)``, ``nu ~ Normal(10, 10**2)`` and the
improper ``p(sigma2) ∝ 1/sigma2``.  Observations ``Z | nu ~ Normal(nu, sigma2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Introduction

__all__ = [
    "NU_PRIOR_MEAN",
    "NU_PRIOR_VAR",
    "AGE_BOUNDS",
    "ModelParams",
    "RoadRecord",
    "RoadState",
    "TemporalData",
    "Dataset",
    "log_prior",
    "log_poisson_pmf",
]

NU_PRIOR_MEAN = 10.0
NU_PRIOR_VAR = 100.0
AGE_BOUNDS = (1.0, 200.0)


@dataclass(frozen=True)
class ModelParams:
    lambdas: tuple[float, ...]
    nu: float
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        if len(self.lambdas) < 1:
            raise ValueError("need at least one group rate")

    @property
    def groups(self) -> int:
        return len(self.lambdas)

    def validate(self):
        if not all(math.isfinite(x) and x > 0 for x in self.lambdas):
            raise ValueError(f"introduction rates must be finite and positive: {self.lambdas}")
        if not (math.isfinite(self.nu) and self.nu >= 0):
            raise ValueError(f"spread rate must be finite and non-negative: {self.nu}")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be finite and positive: {self.sigma2}")
        return self


@dataclass(frozen=True)
class RoadRecord:
    """One surveyed road: group label (1-based), road id, age and 6-bit pattern."""

    group: int
    road: int
    age: float
    observed: int

    def validate(self, age_bounds=AGE_BOUNDS):
        lo, hi = age_bounds
        if self.group < 1:
            raise ValueError(f"group must be >= 1, got {self.group}")
        if not lo <= self.age <= hi:
            raise ValueError(f"road age {self.age} outside [{lo}, {hi}]")
        if not 0 <= self.observed < 64:
            raise ValueError(f"observed pattern {self.observed} is not 6-bit")
        return self


@dataclass
class RoadState:
    """Latent introductions on one road plus the data they generate.

    ``footprints[i]`` caches the footprint of ``introductions[i]`` under the
    current spread rate, so ``simulated`` is their bitwise OR.
    """

    introductions: list[Introduction] = field(default_factory=list)
    footprints: list[int] = field(default_factory=list)
    simulated: int = 0

    @property
    def k(self) -> int:
        return len(self.introductions)

    def copy(self) -> "RoadState":
        return RoadState(list(self.introductions), list(self.footprints), self.simulated)

    def check(self, nu, T, layout=None):
        """Recompute footprints from scratch and compare (debug aid)."""
        from .geometry import DEFAULT_LAYOUT, footprint
        layout = layout or DEFAULT_LAYOUT
        fps = [footprint(x.s, x.t, nu, T, layout) for x in self.introductions]
        union = 0
        for f in fps:
            if f == 0:
                raise AssertionError("introduction outside the horizon")
            union |= f
        if fps != self.footprints or union != self.simulated:
            raise AssertionError("cached footprints out of date")


@dataclass(frozen=True)
class TemporalData:
    """Observed spread rates (m/yr) from resurveyed transects."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).ravel()
        if z.size < 2:
            raise ValueError("temporal data needs at least two values")
        if not np.all(np.isfinite(z)):
            raise ValueError("temporal data must be finite")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return int(self.z.size)

    def __eq__(self, other):
        return isinstance(other, TemporalData) and np.array_equal(self.z, other.z)

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    roads: tuple[RoadRecord, ...]
    temporal: TemporalData

    def __post_init__(self):
        object.__setattr__(self, "roads", tuple(self.roads))
        seen = set()
        for r in self.roads:
            key = (r.group, r.road)
            if key in seen:
                raise ValueError(f"duplicate road {key}")
            seen.add(key)

    @property
    def groups(self) -> int:
        return max((r.group for r in self.roads), default=1)


def log_prior(params: ModelParams) -> float:
    """Joint log prior density; ``-inf`` outside the support."""
    if any(not (x > 0) for x in params.lambdas) or not (params.sigma2 > 0):
        return -math.inf
    lp = -sum(params.lambdas)
    lp += -0.5 * math.log(2.0 * math.pi * NU_PRIOR_VAR) - (params.nu - NU_PRIOR_MEAN) ** 2 / (2.0 * NU_PRIOR_VAR)
    lp += -math.log(params.sigma2)
    return lp


def log_poisson_pmf(k: int, mu: float) -> float:
    if mu <= 0:
        raise ValueError(f"Poisson mean must be positive, got {mu}")
    if k < 0:
        raise ValueError(f"count must be non-negative, got {k}")
    return k * math.log(mu) - mu - math.lgamma(k + 1)
