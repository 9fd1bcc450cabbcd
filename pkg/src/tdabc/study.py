"""Posterior summaries and the simulate-then-infer coverage study."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .model import ModelParams
from .samplers import ChainConfig, ChainTrace, DegenerateDataError, InitializationError, run_chain
from .simulate import simulate_dataset

logger = logging.getLogger(__name__)

__all__ = [
    "ParameterSummary",
    "CoverageRow",
    "CoverageResult",
    "summarize_trace",
    "interval_covers",
    "coverage_from_traces",
    "default_road_table",
    "coverage_study",
]

DEFAULT_AGE_RANGE = (6, 56)


class ParameterSummary(NamedTuple):
    parameter: str
    median: float
    lower: float
    upper: float
    mean: float


class CoverageRow(NamedTuple):
    parameter: str
    coverage: float
    std_error: float
    n_effective: int
    n_failed: int


def _columns(trace) -> dict[str, np.ndarray]:
    if isinstance(trace, ChainTrace):
        return {name: trace.parameter(name) for name in trace.parameters()}
    if isinstance(trace, Mapping):
        return {k: np.asarray(v, dtype=float) for k, v in trace.items()}
    return {"x": np.asarray(trace, dtype=float)}


def summarize_trace(trace, quantiles=(0.025, 0.975)) -> list[ParameterSummary]:
    """Median, interval ends and mean of every parameter in ``trace``.

    ``trace`` is a :class:`ChainTrace` (group rates, nu and sigma2), a mapping
    of name to samples, or a bare array.  Quantiles use linear interpolation
    between order statistics (numpy's default rule).
    """
    lo, hi = (float(q) for q in quantiles)
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError(f"quantiles must be sorted and within [0, 1], got {tuple(quantiles)}")
    out = []
    for name, x in _columns(trace).items():
        if x.size == 0:
            raise ValueError("empty trace")
        q = np.quantile(x, [0.5, lo, hi])
        out.append(ParameterSummary(name, float(q[0]), float(q[1]), float(q[2]), float(np.mean(x))))
    return out


def _truth_of(params: ModelParams) -> dict[str, float]:
    truth = {f"lambda_{g + 1}": float(lam) for g, lam in enumerate(params.lambdas)}
    truth["nu"] = float(params.nu)
    truth["sigma2"] = float(params.sigma2)
    return truth


def interval_covers(trace, truth: Mapping[str, float], level: float = 0.95) -> dict[str, bool]:
    """Whether each parameter's central ``level`` interval contains its true value."""
    a = 0.5 * (1.0 - level)
    rows = summarize_trace(trace, (a, 1.0 - a))
    return {r.parameter: bool(r.lower <= truth[r.parameter] <= r.upper) for r in rows if r.parameter in truth}


def _table(hits: list[dict[str, bool] | None], names) -> list[CoverageRow]:
    ok = [h for h in hits if h is not None]
    failed = len(hits) - len(ok)
    rows = []
    for name in names:
        n = len(ok)
        if n == 0:
            rows.append(CoverageRow(name, math.nan, math.nan, 0, failed))
            continue
        p = sum(h[name] for h in ok) / n
        rows.append(CoverageRow(name, p, math.sqrt(p * (1.0 - p) / n), n, failed))
    return rows


def coverage_from_traces(traces, truth: Mapping[str, float], level: float = 0.95) -> list[CoverageRow]:
    """Coverage table from ready-made traces; ``None`` entries count as failed."""
    hits = [None if tr is None else interval_covers(tr, truth, level) for tr in traces]
    return _table(hits, list(truth))


def default_road_table(rng: np.random.Generator, n_roads: int, groups: int = 1,
                       ages=DEFAULT_AGE_RANGE) -> list[tuple[int, float]]:
    """``n_roads`` roads per group with integer ages uniform on ``ages`` (inclusive)."""
    out = []
    for g in range(1, groups + 1):
        out.extend((g, float(a)) for a in rng.integers(ages[0], ages[1] + 1, size=n_roads))
    return out


@dataclass
class CoverageResult:
    rows: list[CoverageRow]
    covered: list[dict[str, bool] | None]
    failures: list[tuple[int, str]] = field(default_factory=list)

    def row(self, parameter: str) -> CoverageRow:
        for r in self.rows:
            if r.parameter == parameter:
                return r
        raise KeyError(parameter)


def _replicate(job):
    index, seq, params, roads, config, n_z, level = job
    rng = np.random.default_rng(seq)
    sim = simulate_dataset(rng, params, roads, n_z)
    try:
        trace = run_chain(rng, sim.dataset, config)
    except (InitializationError, DegenerateDataError) as exc:
        return index, None, f"{type(exc).__name__}: {exc}"
    return index, interval_covers(trace, _truth_of(params), level), None


def coverage_study(seed: int, true_params: ModelParams, roads, replicates: int, config: ChainConfig,
                   n_z: int = 26, level: float = 0.95, workers: int = 1) -> CoverageResult:
    """Repeat simulate_dataset + run_chain and tabulate interval coverage.

    Replicate ``i`` uses the ``i``-th child of ``SeedSequence(seed)`` for both
    the simulation and the chain, so results do not depend on ``workers``.
    Replicates whose chain cannot be initialised are excluded from the
    coverage denominator and reported in ``n_failed``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    true_params.validate()
    roads = [(int(g), float(a)) for g, a in roads]
    seqs = np.random.SeedSequence(seed).spawn(replicates)
    jobs = [(i, s, true_params, roads, config, n_z, level) for i, s in enumerate(seqs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, jobs))
    else:
        results = [_replicate(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    covered = [r[1] for r in results]
    failures = [(r[0], r[2]) for r in results if r[2] is not None]
    for i, msg in failures:
        logger.warning("replicate %d failed: %s", i, msg)
    return CoverageResult(_table(covered, list(_truth_of(true_params))), covered, failures)
