"""Exact and brute-force likelihoods used to validate the samplers.

A road's introductions form a Poisson process of rate ``lambda`` on the
horizon.  Grouping horizon points by footprint gives independent Poisson
counts per cell, and the survey pattern is the union of the footprints of
occupied cells.  Hence ``P(data ⊆ S) = exp(-lambda * (A_H - A(S)))`` where
``A(S)`` is the area of cells whose footprint lies inside ``S``, and Möbius
inversion over subsets gives ``P(data = Y)``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .geometry import DEFAULT_LAYOUT, TransectLayout, footprints, horizon_partition
from .summaries import Summary, achievable_summaries, summarize, summary_fiber

__all__ = [
    "LikelihoodTable",
    "likelihood_table",
    "exact_likelihood",
    "exact_summary_likelihood",
    "mc_likelihood",
    "exact_posterior_grid",
    "grid_tv_distance",
]


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


class LikelihoodTable:
    """Inclusion-exclusion terms for every pattern at fixed ``(nu, T)``."""

    def __init__(self, nu: float, T: float, layout: TransectLayout = DEFAULT_LAYOUT):
        if T <= 0:
            raise ValueError("road age must be positive")
        self.nu = nu
        self.T = T
        self.layout = layout
        self.cells = horizon_partition(nu, T, layout)
        self.area = math.fsum(c.area for c in self.cells)
        n = layout.quadrat_count
        self.npatterns = 1 << n
        inside = np.zeros(self.npatterns)
        for S in range(self.npatterns):
            inside[S] = math.fsum(c.area for c in self.cells if c.footprint & ~S == 0)
        self._inside = inside
        # per pattern: signs and outside-areas of its submask terms
        self._terms = []
        for Y in range(self.npatterns):
            subs = list(_submasks(Y))
            ones = bin(Y).count("1")
            signs = np.array([(-1) ** (ones - bin(S).count("1")) for S in subs], dtype=float)
            outside = np.array([self.area - inside[S] for S in subs])
            self._terms.append((signs, outside))

    def probability(self, pattern: int, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("introduction rate must be positive")
        signs, outside = self._terms[pattern]
        p = np.exp(-np.multiply.outer(lam, outside)) @ signs
        if np.any(p < -1e-12):
            raise ArithmeticError(f"negative probability {p.min()} for pattern {pattern}; partition is inconsistent")
        p = np.clip(p, 0.0, 1.0)
        return float(p) if p.ndim == 0 else p

    def summary_probability(self, s, lam):
        fiber = summary_fiber(s, self.layout.quadrat_count)
        if not fiber:
            raise ValueError(f"summary {tuple(s)} is not achievable")
        total = sum(np.asarray(self.probability(p, lam)) for p in fiber)
        return float(total) if np.ndim(total) == 0 else total


@lru_cache(maxsize=512)
def likelihood_table(nu: float, T: float, layout: TransectLayout = DEFAULT_LAYOUT) -> LikelihoodTable:
    return LikelihoodTable(float(nu), float(T), layout)


def exact_likelihood(Y: int, lam, nu: float, T: float, layout: TransectLayout = DEFAULT_LAYOUT):
    """``P(data = Y | lambda, nu, T)``; vectorised over ``lam``."""
    return likelihood_table(nu, T, layout).probability(Y, lam)


def exact_summary_likelihood(s, lam, nu: float, T: float, layout: TransectLayout = DEFAULT_LAYOUT):
    """``P(summary(data) = s | lambda, nu, T)``; vectorised over ``lam``."""
    return likelihood_table(nu, T, layout).summary_probability(s, lam)


def mc_likelihood(rng: np.random.Generator, Y: int, lam: float, nu: float, T: float,
                  n_sims: int, layout: TransectLayout = DEFAULT_LAYOUT,
                  max_points: int = 4_000_000):
    """Monte Carlo estimate of ``P(data = Y)`` and its binomial standard error.

    Deliberately avoids the horizon geometry: points are a Poisson process on
    the bounding box ``[-nu*T, L + nu*T] x [0, T]`` and points with an empty
    footprint simply have no effect.
    """
    if n_sims < 1:
        raise ValueError("n_sims must be >= 1")
    if lam <= 0:
        raise ValueError("introduction rate must be positive")
    R = nu * T
    lo, hi = -R, layout.length + R
    box = (hi - lo) * T
    n = layout.quadrat_count
    hits = 0
    done = 0
    per_sim = max(lam * box, 1e-9)
    chunk = int(max(1, min(n_sims, max_points / per_sim)))
    while done < n_sims:
        m = min(chunk, n_sims - done)
        counts = rng.poisson(lam * box, size=m)
        total = int(counts.sum())
        s = lo + (hi - lo) * rng.random(total)
        t = T * rng.random(total)
        fp = footprints(s, nu * (T - t), layout)
        owner = np.repeat(np.arange(m), counts)
        pattern = np.zeros(m, dtype=np.int64)
        for b in range(n):
            hit = np.bincount(owner, weights=(fp >> b) & 1, minlength=m) > 0
            pattern |= hit.astype(np.int64) << b
        hits += int(np.count_nonzero(pattern == Y))
        done += m
    p = hits / n_sims
    return p, math.sqrt(p * (1.0 - p) / n_sims)


def exact_posterior_grid(observed, ages, nu: float, lambda_grid, log_prior=None,
                         summary_likelihood=None, layout: TransectLayout = DEFAULT_LAYOUT):
    """Posterior weights of a single group's rate on a grid, at fixed ``nu``.

    ``observed`` holds one summary (or pattern, which is summarized) per road
    and ``ages`` the matching road ages.  Conditioning on the summaries rather
    than the patterns gives exactly the eps=0 ABC posterior.  ``log_prior``
    defaults to Exponential(1); ``summary_likelihood(s, lam, nu, T)`` may be
    injected for testing.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty lambda grid")
    if np.any(grid <= 0):
        raise ValueError("lambda grid must be positive")
    if len(observed) != len(ages):
        raise ValueError("need one age per observed road")
    logw = -grid if log_prior is None else np.asarray(log_prior(grid), dtype=float)
    like = summary_likelihood or (lambda s, lam, nu_, T: exact_summary_likelihood(s, lam, nu_, T, layout))
    for obs, T in zip(observed, ages):
        s = summarize(obs, layout.quadrat_count) if isinstance(obs, (int, np.integer)) else Summary(*obs)
        with np.errstate(divide="ignore"):
            logw = logw + np.log(np.asarray(like(s, grid, nu, T), dtype=float))
    if not np.any(np.isfinite(logw)):
        raise ValueError("posterior has no mass on the grid")
    w = np.exp(logw - np.max(logw))
    return w / w.sum()


def grid_tv_distance(samples, grid, weights) -> float:
    """Total-variation distance between binned samples and grid weights.

    Each grid point owns the bin between the midpoints to its neighbours
    (half a spacing beyond the ends); samples outside all bins count as
    mismatch.
    """
    grid = np.asarray(grid, dtype=float)
    weights = np.asarray(weights, dtype=float)
    samples = np.asarray(samples, dtype=float)
    mid = 0.5 * (grid[1:] + grid[:-1])
    edges = np.concatenate([[grid[0] - (mid[0] - grid[0])], mid, [grid[-1] + (grid[-1] - mid[-1])]])
    counts, _ = np.histogram(samples, bins=edges)
    freq = counts / samples.size
    outside = 1.0 - freq.sum()
    return 0.5 * (np.abs(freq - weights).sum() + outside)
