"""Forward simulation of introductions, spread and the resulting survey data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DEFAULT_LAYOUT, Introduction, TransectLayout, _footprint, horizon_area, sample_uniform_horizon
from .model import Dataset, ModelParams, RoadRecord, RoadState, TemporalData

__all__ = ["data_from_introductions", "simulate_road", "simulate_dataset", "SimulatedDataset"]


def data_from_introductions(introductions, nu: float, T: float,
                            layout: TransectLayout = DEFAULT_LAYOUT) -> int:
    """Survey pattern at age ``T``: bitwise OR of the introductions' footprints."""
    pattern = 0
    for s, t in introductions:
        pattern |= _footprint(s, nu * (T - t), layout)
    return pattern


def simulate_road(rng: np.random.Generator, lambda_g: float, nu: float, T: float,
                  layout: TransectLayout = DEFAULT_LAYOUT) -> RoadState:
    """Poisson number of introductions, uniform on the horizon, plus their data."""
    if lambda_g <= 0:
        raise ValueError("introduction rate must be positive")
    k = int(rng.poisson(lambda_g * horizon_area(nu, T, layout)))
    state = RoadState()
    for _ in range(k):
        x = sample_uniform_horizon(rng, nu, T, layout)
        f = _footprint(x.s, nu * (T - x.t), layout)
        state.introductions.append(Introduction(x.s, x.t))
        state.footprints.append(f)
        state.simulated |= f
    return state


@dataclass(frozen=True)
class SimulatedDataset:
    dataset: Dataset
    latents: tuple[RoadState, ...]
    params: ModelParams


def simulate_dataset(rng: np.random.Generator, params: ModelParams, roads,
                     n_z: int, layout: TransectLayout = DEFAULT_LAYOUT) -> SimulatedDataset:
    """Simulate survey patterns for every road and ``n_z`` temporal observations.

    ``roads`` is a sequence of ``(group, age)`` pairs; roads are numbered
    within their group in the given order.  The latent introductions are kept
    alongside the data for later diagnostics.
    """
    params.validate()
    if n_z < 2:
        raise ValueError("need at least two temporal observations")
    records = []
    latents = []
    counters: dict[int, int] = {}
    for group, age in roads:
        group = int(group)
        if not 1 <= group <= params.groups:
            raise ValueError(f"road group {group} has no rate in {params.lambdas}")
        counters[group] = counters.get(group, 0) + 1
        state = simulate_road(rng, params.lambdas[group - 1], params.nu, float(age), layout)
        records.append(RoadRecord(group, counters[group], float(age), state.simulated))
        latents.append(state)
    z = rng.normal(params.nu, np.sqrt(params.sigma2), size=n_z)
    return SimulatedDataset(Dataset(tuple(records), TemporalData(z)), tuple(latents), params)
