"""Transdimensional ABC for point-process invasion models on surveyed roads."""
__version__ = "0.1.0"

from .geometry import DEFAULT_LAYOUT, Horizon, Introduction, TransectLayout, footprint, horizon_area, horizon_partition
from .model import Dataset, ModelParams, RoadRecord, RoadState, TemporalData
from .exact_oracle import exact_likelihood, exact_posterior_grid, mc_likelihood
from .samplers import ChainConfig, ChainTrace, rejection_abc, run_chain
from .simulate import simulate_dataset
from .summaries import Summary, summarize
