"""ABC samplers: rejection ABC and the birth-death transdimensional Gibbs/ABC chain.

Both target the eps-ABC posterior that conditions each road on the summary of
its survey pattern, and ``Z`` on its exact Gaussian likelihood.

Birth-death bookkeeping
-----------------------
A birth draws a point uniformly on the horizon (density ``1/A``) and a death
removes one of the ``k + 1`` points uniformly.  The sampler never uses the
order of the stored points, so appending a birth is equivalent to inserting it
at a uniformly random slot; with that form the forward density is
``(1/3)(1/A)(1/(k+1))``, the reverse ``(1/3)(1/(k+1))``, the ordered prior
ratio ``mu/(k+1) * 1/A`` with ``mu = lambda * A``, and the Jacobian is 1.
Together the birth ratio is ``K* / K * mu / (k + 1)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import (DEFAULT_LAYOUT, Introduction, TransectLayout, _footprint, _grouped_horizon_points,
                       _horizon_area, partition_areas,
                       footprints, horizon_area, sample_uniform_horizon)
from .model import NU_PRIOR_MEAN, NU_PRIOR_VAR, Dataset, RoadState
from .summaries import KERNELS, kernel_table

logger = logging.getLogger(__name__)

__all__ = [
    "NU_UPDATE_MODES",
    "ChainConfig",
    "ChainTrace",
    "NoMatchError",
    "InitializationError",
    "DegenerateDataError",
    "td_accept_ratio",
    "birth_death_ratio",
    "birth_death_step",
    "position_move",
    "gibbs_sigma2",
    "gibbs_lambda",
    "nu_conditional",
    "update_nu",
    "initialize_road",
    "sample_nu_given_z",
    "rejection_abc",
    "run_chain",
    "ChainState",
]

NU_UPDATE_MODES = ("exact_mh", "paper_gibbs")


class NoMatchError(RuntimeError):
    """Rejection ABC found no simulated data matching the observations."""


class InitializationError(RuntimeError):
    """A road could not be initialised in a region of positive posterior mass."""


class DegenerateDataError(ValueError):
    """The temporal data leave a conditional undefined."""


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 250_000
    burn_in: int = 25_000
    seed: int = 0
    epsilon: float = 0.0
    kernel: str = "indicator"
    nu_update_mode: str = "exact_mh"
    position_move_scale: tuple[float, float] = (2.0, 1.0)
    record_latents: bool = False
    fixed_nu: float | None = None
    nu_retry_cap: int = 100
    init_max_attempts: int = 1_000_000
    batch_size: int = 5_000

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}")
        if self.kernel == "gaussian" and self.epsilon == 0:
            raise ValueError("gaussian kernel needs epsilon > 0")
        if self.nu_update_mode not in NU_UPDATE_MODES:
            raise ValueError(f"nu_update_mode must be one of {NU_UPDATE_MODES}")
        scale = tuple(float(x) for x in self.position_move_scale)
        if len(scale) != 2 or min(scale) <= 0:
            raise ValueError("position_move_scale needs two positive entries")
        object.__setattr__(self, "position_move_scale", scale)
        if self.fixed_nu is not None and self.fixed_nu <= 0:
            raise ValueError("fixed_nu must be positive")
        if self.nu_retry_cap < 1 or self.init_max_attempts < 1 or self.batch_size < 1:
            raise ValueError("retry caps and batch size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def kept(self) -> int:
        return self.iterations - self.burn_in


@dataclass
class ChainTrace:
    """Post-burn-in draws.  Row ``i`` is the state after iteration ``burn_in + i + 1``."""

    lambdas: np.ndarray
    nu: np.ndarray
    sigma2: np.ndarray
    k: np.ndarray
    roads: list[tuple[int, int]]
    latents: list | None = None
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.nu.shape[0])

    @property
    def columns(self) -> list[str]:
        G = self.lambdas.shape[1]
        return ([f"lambda_{g + 1}" for g in range(G)] + ["nu", "sigma2"]
                + [f"k_{g}_{r}" for g, r in self.roads])

    def parameter(self, name: str) -> np.ndarray:
        if name in ("nu", "sigma2"):
            return getattr(self, name)
        if name.startswith("lambda_"):
            return self.lambdas[:, int(name.split("_")[1]) - 1]
        if name.startswith("k_"):
            _, g, r = name.split("_")
            return self.k[:, self.roads.index((int(g), int(r)))]
        raise KeyError(name)

    def parameters(self) -> list[str]:
        return self.columns[: self.lambdas.shape[1] + 2]

    def row(self, i: int) -> list:
        return [*self.lambdas[i].tolist(), float(self.nu[i]), float(self.sigma2[i]), *self.k[i].tolist()]


# -- acceptance ratios ------------------------------------------------------

def td_accept_ratio(kernel_new: float, kernel_old: float, log_prior_new: float, log_prior_old: float,
                    log_q_reverse: float, log_q_forward: float, jacobian: float = 1.0) -> float:
    """Metropolis-Hastings-Green ratio for a (possibly) dimension-changing move.

    ``alpha = K*/K * prior*/prior * q(reverse)/q(forward) * |J|``.  The proposal
    densities include the auxiliary-variable densities of each direction.  A
    zero current kernel weight with a nonzero proposed one gives ``inf``; both
    zero give 0.
    """
    if jacobian <= 0:
        raise ValueError("jacobian must be positive")
    if kernel_new == 0.0:
        return 0.0
    if kernel_old == 0.0:
        return math.inf
    log_a = (log_prior_new - log_prior_old) + (log_q_reverse - log_q_forward) + math.log(jacobian)
    if log_a > 700.0:
        return math.inf
    return kernel_new / kernel_old * math.exp(log_a)


def birth_death_ratio(move: int, k: int, mu: float, kernel_new: float = 1.0, kernel_old: float = 1.0) -> float:
    """Acceptance ratio of a birth (``move=+1``) or death (``move=-1``) from ``k`` points.

    Closed form of :func:`td_accept_ratio` under the bookkeeping in the module
    docstring: ``K*/K * mu/(k+1)`` for a birth and ``K*/K * k/mu`` for a death.
    """
    if kernel_new == 0.0:
        return 0.0
    if kernel_old == 0.0:
        return math.inf
    if move == 1:
        return kernel_new / kernel_old * mu / (k + 1)
    if move == -1:
        if k < 1:
            return 0.0
        return kernel_new / kernel_old * k / mu
    if move == 0:
        return kernel_new / kernel_old
    raise ValueError("move must be -1, 0 or 1")


# -- per-road moves ---------------------------------------------------------

def birth_death_step(rng: np.random.Generator, road: RoadState, lambda_g: float, nu: float, T: float,
                     kernel, layout: TransectLayout = DEFAULT_LAYOUT, area: float | None = None) -> bool:
    """One birth/stay/death proposal on ``road`` (modified in place).

    ``kernel`` maps a simulated pattern to its weight against the observed
    summary (see :func:`tdabc.summaries.kernel_table`).  Returns whether a
    dimension change was accepted.
    """
    A = _horizon_area(nu, T, layout) if area is None else area
    u = rng.random()
    k = len(road.introductions)
    if u < 1.0 / 3.0:
        if k == 0:
            return False
        d = int(rng.random() * k)
        new_sim = 0
        for j, f in enumerate(road.footprints):
            if j != d:
                new_sim |= f
        a = birth_death_ratio(-1, k, lambda_g * A, kernel[new_sim], kernel[road.simulated])
        if a >= 1.0 or (a > 0.0 and rng.random() < a):
            del road.introductions[d]
            del road.footprints[d]
            road.simulated = new_sim
            return True
        return False
    if u < 2.0 / 3.0:
        return False
    x = sample_uniform_horizon(rng, nu, T, layout)
    f = _footprint(x.s, nu * (T - x.t), layout)
    new_sim = road.simulated | f
    a = birth_death_ratio(1, k, lambda_g * A, kernel[new_sim], kernel[road.simulated])
    if a >= 1.0 or (a > 0.0 and rng.random() < a):
        road.introductions.append(x)
        road.footprints.append(f)
        road.simulated = new_sim
        return True
    return False


def position_move(rng: np.random.Generator, road: RoadState, nu: float, T: float, kernel,
                  scales=(2.0, 1.0), layout: TransectLayout = DEFAULT_LAYOUT) -> bool:
    """Random-walk Metropolis move of one introduction within the horizon.

    The uniform prior and the symmetric proposal cancel, leaving the kernel
    ratio.  Proposals outside the horizon are rejected.
    """
    k = len(road.introductions)
    if k == 0:
        return False
    i = int(rng.random() * k)
    x = road.introductions[i]
    s = x.s + scales[0] * rng.standard_normal()
    t = x.t + scales[1] * rng.standard_normal()
    if t < 0.0 or t > T:
        return False
    f = _footprint(s, nu * (T - t), layout)
    if f == 0:
        return False
    new_sim = f
    for j, g in enumerate(road.footprints):
        if j != i:
            new_sim |= g
    k_new = kernel[new_sim]
    if k_new == 0.0:
        return False
    k_old = kernel[road.simulated]
    if k_new < k_old and rng.random() >= k_new / k_old:
        return False
    road.introductions[i] = Introduction(s, t)
    road.footprints[i] = f
    road.simulated = new_sim
    return True


# -- conjugate conditionals -------------------------------------------------

def gibbs_sigma2(rng: np.random.Generator, nu: float, z) -> float:
    """Inverse-gamma draw of sigma2 given nu and Z under ``p(sigma2) ∝ 1/sigma2``."""
    z = np.asarray(z, dtype=float)
    if z.size < 2:
        raise ValueError("need at least two temporal observations")
    ss = float(np.sum((z - nu) ** 2))
    if ss <= 0.0:
        raise DegenerateDataError("all temporal observations equal nu; sigma2 conditional is degenerate")
    return 0.5 * ss / rng.gamma(0.5 * z.size)


def gibbs_lambda(rng: np.random.Generator, k_total: int, area_total: float) -> float:
    """Gamma(1 + k, rate 1 + A) draw of a group rate under an Exponential(1) prior."""
    if area_total <= 0:
        raise ValueError("total horizon area must be positive")
    return rng.gamma(1.0 + k_total) / (1.0 + area_total)


def nu_conditional(z, sigma2: float) -> tuple[float, float]:
    """Mean and standard deviation of nu given Z and sigma2 (Normal prior, no roads)."""
    z = np.asarray(z, dtype=float)
    prec = 1.0 / NU_PRIOR_VAR + z.size / sigma2
    mean = (NU_PRIOR_MEAN / NU_PRIOR_VAR + float(z.sum()) / sigma2) / prec
    return mean, 1.0 / math.sqrt(prec)


def _roads_under_nu(roads, ctx, nu_new, layout):
    """Footprints, patterns and areas of every road under a new spread rate.

    Returns ``None`` if some introduction leaves its horizon or some road's
    kernel weight drops to zero.
    """
    out = []
    for road, c in zip(roads, ctx):
        T = c.T
        fps = []
        union = 0
        for s, t in road.introductions:
            f = _footprint(s, nu_new * (T - t), layout)
            if f == 0:
                return None
            fps.append(f)
            union |= f
        w = c.kernel[union]
        if w == 0.0:
            return None
        out.append((fps, union, _horizon_area(nu_new, T, layout), w))
    return out


def update_nu(rng: np.random.Generator, state: "ChainState", z, sigma2: float,
              mode: str = "exact_mh", retry_cap: int = 100) -> bool:
    """Update the spread rate (and every road's cached data) in place.

    ``exact_mh`` uses the Normal conditional given Z as an independence
    proposal and corrects for the horizon's dependence on nu; the Poisson and
    uniform-location terms reduce to ``exp(-sum lambda_g (A*_gr - A_gr))``.
    ``paper_gibbs`` redraws from the Normal conditional until every road stays
    consistent, keeping nu after ``retry_cap`` failures.
    """
    mean, sd = nu_conditional(z, sigma2)
    layout = state.layout
    if mode == "exact_mh":
        nu_new = mean + sd * rng.standard_normal()
        if nu_new <= 0.0:
            state.stats["nu_rejected"] += 1
            return False
        moved = _roads_under_nu(state.roads, state.ctx, nu_new, layout)
        if moved is None:
            state.stats["nu_rejected"] += 1
            return False
        log_a = 0.0
        for (fps, union, area, w), road, c, a_old in zip(moved, state.roads, state.ctx, state.areas):
            log_a -= state.lambdas[c.group] * (area - a_old)
            log_a += math.log(w / c.kernel[road.simulated])
        if log_a < 0.0 and rng.random() >= math.exp(log_a):
            state.stats["nu_rejected"] += 1
            return False
    elif mode == "paper_gibbs":
        for _ in range(retry_cap):
            nu_new = mean + sd * rng.standard_normal()
            if nu_new <= 0.0:
                continue
            moved = _roads_under_nu(state.roads, state.ctx, nu_new, layout)
            if moved is not None:
                break
        else:
            state.stats["nu_retry_exhausted"] += 1
            return False
    else:
        raise ValueError(f"unknown nu update mode {mode!r}")
    state.nu = nu_new
    for (fps, union, area, w), road, i in zip(moved, state.roads, range(len(state.roads))):
        road.footprints = fps
        road.simulated = union
        state.areas[i] = area
    state.stats["nu_accepted"] += 1
    return True


def sample_nu_given_z(rng: np.random.Generator, z, size: int) -> np.ndarray:
    """Exact draws of nu from ``p(nu | Z)`` restricted to nu > 0.

    The marginal is ``Normal(nu; 10, 100) * S(nu)**(-n/2)`` with
    ``S(nu) = S_min + n (nu - zbar)**2``; proposals come from the prior and are
    accepted with probability ``(S_min / S(nu))**(n/2)``.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    zbar = float(z.mean())
    s_min = float(np.sum((z - zbar) ** 2))
    if s_min <= 0:
        raise DegenerateDataError("temporal observations are all equal")
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = max(64, 4 * (size - filled))
        cand = NU_PRIOR_MEAN + math.sqrt(NU_PRIOR_VAR) * rng.standard_normal(m)
        log_acc = -0.5 * n * np.log1p(n * (cand - zbar) ** 2 / s_min)
        ok = (cand > 0) & (np.log(rng.random(m)) < log_acc)
        take = cand[ok][: size - filled]
        out[filled:filled + take.size] = take
        filled += take.size
    return out


# -- chain state ------------------------------------------------------------

@dataclass
class _RoadContext:
    group: int      # 0-based
    T: float
    kernel: list
    key: tuple[int, int]


@dataclass
class ChainState:
    lambdas: list[float]
    nu: float
    sigma2: float
    roads: list[RoadState]
    ctx: list[_RoadContext]
    areas: list[float]
    layout: TransectLayout = DEFAULT_LAYOUT
    stats: dict = field(default_factory=lambda: {"nu_accepted": 0, "nu_rejected": 0, "nu_retry_exhausted": 0,
                                                 "position_accepted": 0, "birth_death_accepted": 0})


def _contexts(dataset: Dataset, config: ChainConfig, layout):
    ctx = []
    for r in dataset.roads:
        table = kernel_table(r.observed, config.epsilon, config.kernel, layout.quadrat_count).tolist()
        ctx.append(_RoadContext(r.group - 1, float(r.age), table, (r.group, r.road)))
    return ctx


def initialize_road(rng: np.random.Generator, nu: float, T: float, kernel,
                    max_attempts: int = 1_000_000, layout: TransectLayout = DEFAULT_LAYOUT) -> RoadState:
    """Rejection search for latent introductions with positive kernel weight.

    Candidates draw ``k`` uniformly from ``0..n`` and each point's elapsed time
    as ``T * u * v`` (weighted towards recent introductions, whose small
    footprints are otherwise rare), with position uniform over the horizon's
    cross-section.  A candidate is kept with probability equal to its kernel
    weight.  Only the starting point depends on this proposal.
    """
    n = layout.quadrat_count
    gap = layout.gap
    for _ in range(max_attempts):
        k = int(rng.random() * (n + 1))
        state = RoadState()
        for _ in range(k):
            tau = T * rng.random() * rng.random()
            r = nu * tau
            u = rng.random()
            if 2.0 * r >= gap:
                s = -r + u * (layout.length + 2.0 * r)
            else:
                xq = u * n
                i = min(int(xq), n - 1)
                s = i * layout.pitch - r + (xq - i) * (layout.quadrat_width + 2.0 * r)
            f = _footprint(s, r, layout)
            state.introductions.append(Introduction(s, T - tau))
            state.footprints.append(f)
            state.simulated |= f
        w = kernel[state.simulated]
        if w > 0.0 and (w >= 1.0 or rng.random() < w):
            return state
    raise InitializationError(f"no matching latent state after {max_attempts} attempts "
                              f"(nu={nu:g}, T={T:g}); try a larger epsilon")


def _initial_state(rng, dataset: Dataset, config: ChainConfig, layout) -> ChainState:
    z = dataset.temporal.z
    if config.fixed_nu is not None:
        nu = float(config.fixed_nu)
    else:
        nu = float(np.mean(z))
        if nu <= 0:
            nu = NU_PRIOR_MEAN
    sigma2 = float(np.var(z, ddof=1))
    if sigma2 <= 0:
        raise DegenerateDataError("temporal observations are all equal")
    ctx = _contexts(dataset, config, layout)
    roads = [initialize_road(rng, nu, c.T, c.kernel, config.init_max_attempts, layout) for c in ctx]
    areas = [_horizon_area(nu, c.T, layout) for c in ctx]
    G = dataset.groups
    lambdas = []
    for g in range(G):
        k_tot = sum(road.k for road, c in zip(roads, ctx) if c.group == g)
        a_tot = sum(a for a, c in zip(areas, ctx) if c.group == g)
        lambdas.append(gibbs_lambda(rng, k_tot, a_tot) if a_tot > 0 else float(rng.exponential()))
    return ChainState(lambdas, nu, sigma2, roads, ctx, areas, layout)


def run_chain(rng: np.random.Generator | None, dataset: Dataset, config: ChainConfig,
              layout: TransectLayout = DEFAULT_LAYOUT,
              on_record: Callable[[int, ChainTrace], None] | None = None,
              record_every: int = 1000) -> ChainTrace:
    """Birth-death transdimensional ABC within Gibbs.

    Each iteration updates sigma2, then nu, then every group rate, then for
    every road a position move followed by a birth/stay/death proposal.
    ``on_record(stop, trace)`` is called whenever ``record_every`` further rows
    are filled (and at the end), with rows ``[.., stop)`` final.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    z = dataset.temporal.z
    state = _initial_state(rng, dataset, config, layout)
    G = len(state.lambdas)
    R = len(state.roads)
    N = config.kept
    trace = ChainTrace(
        lambdas=np.empty((N, G)), nu=np.empty(N), sigma2=np.empty(N),
        k=np.empty((N, R), dtype=np.int64), roads=[c.key for c in state.ctx],
        latents=[] if config.record_latents else None, stats=state.stats,
    )
    group_roads = [[i for i, c in enumerate(state.ctx) if c.group == g] for g in range(G)]
    scales = config.position_move_scale
    mode = config.nu_update_mode
    fixed = config.fixed_nu is not None
    stats = state.stats
    roads, ctx, areas = state.roads, state.ctx, state.areas
    row = 0
    last_flush = 0
    for it in range(config.iterations):
        state.sigma2 = gibbs_sigma2(rng, state.nu, z)
        if not fixed:
            update_nu(rng, state, z, state.sigma2, mode, config.nu_retry_cap)
        nu = state.nu
        for g in range(G):
            idx = group_roads[g]
            if idx:
                state.lambdas[g] = gibbs_lambda(rng, sum(len(roads[i].introductions) for i in idx),
                                                sum(areas[i] for i in idx))
            else:
                state.lambdas[g] = float(rng.exponential())
        for i in range(R):
            c = ctx[i]
            road = roads[i]
            if position_move(rng, road, nu, c.T, c.kernel, scales, layout):
                stats["position_accepted"] += 1
            if birth_death_step(rng, road, state.lambdas[c.group], nu, c.T, c.kernel, layout, areas[i]):
                stats["birth_death_accepted"] += 1
        if it >= config.burn_in:
            trace.lambdas[row] = state.lambdas
            trace.nu[row] = nu
            trace.sigma2[row] = state.sigma2
            for i in range(R):
                trace.k[row, i] = len(roads[i].introductions)
            if trace.latents is not None:
                trace.latents.append(tuple(tuple(r.introductions) for r in roads))
            row += 1
            if on_record is not None and row - last_flush >= record_every:
                on_record(row, trace)
                last_flush = row
    if on_record is not None and row > last_flush:
        on_record(row, trace)
    stats["iterations"] = config.iterations
    return trace


# -- rejection ABC ----------------------------------------------------------

def _or_by_owner(counts, fp):
    """Bitwise OR of consecutive footprint segments of the given lengths."""
    pattern = np.zeros(counts.size, dtype=np.int64)
    busy = counts > 0
    if fp.size:
        starts = np.cumsum(counts) - counts
        pattern[busy] = np.bitwise_or.reduceat(fp, starts[busy])
    return pattern


_MAX_POINTS = 1 << 21


def _road_points(rng, nu, c, lam, area, layout):
    """Point-by-point simulation of one road for every proposal (keeps latents)."""
    k = rng.poisson(lam * area)
    patterns = np.empty(nu.size, dtype=np.int64)
    owners, ss, ts = [], [], []
    cum = np.cumsum(k)
    a = 0
    while a < nu.size:
        # no chunk holds more than _MAX_POINTS introductions (unless one proposal does)
        base = cum[a - 1] if a else 0
        b = max(a + 1, int(np.searchsorted(cum, base + _MAX_POINTS, side="right")))
        owner, s, tau = _grouped_horizon_points(rng, nu[a:b], c.T, k[a:b], area[a:b], layout)
        patterns[a:b] = _or_by_owner(k[a:b], footprints(s, nu[a:b][owner] * tau, layout))
        owners.append(owner + a)
        ss.append(s)
        ts.append(c.T - tau)
        a = b
    return k, patterns, (np.concatenate(owners), np.concatenate(ss), np.concatenate(ts))


def _road_cells(rng, nu, c, lam, layout):
    """Same distribution via independent Poisson counts on the footprint cells."""
    fps, cell_area = partition_areas(nu, c.T, layout)
    counts = rng.poisson(lam[:, None] * cell_area)
    patterns = np.bitwise_or.reduce(np.where(counts > 0, fps, 0), axis=1)
    return counts.sum(axis=1), patterns


def _propose_batch(rng, m, dataset, ctx, config, layout):
    """Simulate ``m`` prior/posterior-given-Z proposals and their acceptance.

    Without latents the roads are simulated through cell counts, whose cost
    does not grow with the number of introductions.
    """
    z = dataset.temporal.z
    G = dataset.groups
    if config.fixed_nu is not None:
        nu = np.full(m, float(config.fixed_nu))
    else:
        nu = sample_nu_given_z(rng, z, m)
    ss = np.sum((z[None, :] - nu[:, None]) ** 2, axis=1)
    sigma2 = 0.5 * ss / rng.gamma(0.5 * z.size, size=m)
    lambdas = rng.exponential(size=(m, G))
    weight = np.ones(m)
    ks = np.empty((m, len(ctx)), dtype=np.int64)
    points = []
    for j, c in enumerate(ctx):
        lam = lambdas[:, c.group]
        if config.record_latents:
            k, pattern, pts = _road_points(rng, nu, c, lam, horizon_area(nu, c.T, layout), layout)
            points.append(pts)
        else:
            k, pattern = _road_cells(rng, nu, c, lam, layout)
        ks[:, j] = k
        weight *= np.asarray(c.kernel)[pattern]
    accept = rng.random(m) < weight
    return lambdas, nu, sigma2, ks, points, accept


def rejection_abc(rng: np.random.Generator | None, dataset: Dataset, config: ChainConfig,
                  layout: TransectLayout = DEFAULT_LAYOUT) -> ChainTrace:
    """Rejection ABC with the keep-previous-state rule.

    Every iteration proposes group rates from their Exponential(1) prior,
    ``(nu, sigma2)`` exactly from their posterior given Z (or nu fixed), and
    each road's introductions from the Poisson/uniform prior; the proposal
    replaces the state with probability equal to the product of the roads'
    kernel weights.  Proposals are simulated in vectorised batches.  The
    initial state is the first accepted proposal within
    ``config.init_max_attempts`` tries.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    ctx = _contexts(dataset, config, layout)
    G = dataset.groups
    R = len(ctx)
    m = config.batch_size
    current = None
    tried = 0
    while current is None:
        if tried >= config.init_max_attempts:
            raise NoMatchError(f"no simulated dataset matched after {tried} proposals; "
                               "increase epsilon or the attempt cap")
        size = min(m, config.init_max_attempts - tried)
        lam, nu, s2, ks, pts, acc = _propose_batch(rng, size, dataset, ctx, config, layout)
        tried += size
        hit = np.flatnonzero(acc)
        if hit.size:
            j = int(hit[0])
            current = (lam[j], nu[j], s2[j], ks[j], _latents_of(pts, j) if config.record_latents else None)
    N = config.kept
    trace = ChainTrace(lambdas=np.empty((N, G)), nu=np.empty(N), sigma2=np.empty(N),
                       k=np.empty((N, R), dtype=np.int64), roads=[c.key for c in ctx],
                       latents=[] if config.record_latents else None,
                       stats={"init_proposals": tried, "accepted": 0})
    done = 0
    while done < config.iterations:
        size = min(m, config.iterations - done)
        lam, nu, s2, ks, pts, acc = _propose_batch(rng, size, dataset, ctx, config, layout)
        trace.stats["accepted"] += int(acc.sum())
        src = np.where(acc, np.arange(size), -1)
        np.maximum.accumulate(src, out=src)
        keep = np.arange(size) + done >= config.burn_in
        rows = np.arange(size)[keep] + done - config.burn_in
        from_batch = src[keep] >= 0
        if rows.size:
            sel = src[keep][from_batch]
            trace.lambdas[rows[from_batch]] = lam[sel]
            trace.nu[rows[from_batch]] = nu[sel]
            trace.sigma2[rows[from_batch]] = s2[sel]
            trace.k[rows[from_batch]] = ks[sel]
            old = rows[~from_batch]
            trace.lambdas[old] = current[0]
            trace.nu[old] = current[1]
            trace.sigma2[old] = current[2]
            trace.k[old] = current[3]
            if trace.latents is not None:
                cache = {}
                for j in src[keep]:
                    j = int(j)
                    if j < 0:
                        trace.latents.append(current[4])
                    else:
                        if j not in cache:
                            cache[j] = _latents_of(pts, j)
                        trace.latents.append(cache[j])
        last = int(src[-1])
        if last >= 0:
            current = (lam[last], nu[last], s2[last], ks[last],
                       _latents_of(pts, last) if config.record_latents else None)
        done += size
    return trace


def _latents_of(points, j):
    out = []
    for owner, s, t in points:
        sel = owner == j
        out.append(tuple(Introduction(float(a), float(b)) for a, b in zip(s[sel], t[sel])))
    return tuple(out)
