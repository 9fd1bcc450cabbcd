"""Space-time horizon geometry for a road transect of equally spaced quadrats.

An introduction at position ``s`` (m along the road) and time ``t`` (yr since
road construction) spreads linearly at ``nu`` m/yr, so at survey time ``T`` it
occupies ``[s - r, s + r]`` with ``r = nu * (T - t)``.  Its *footprint* is the
set of quadrats that interval touches.  Because quadrats are disjoint and
sorted, a footprint is always a contiguous block of quadrats.

Patterns are stored as plain ``int`` bitmasks with quadrat 0 in the most
significant bit, so ``0b110010`` is the pattern ``110010``.  Integer order is
therefore the documented total order on patterns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "TransectLayout",
    "DEFAULT_LAYOUT",
    "Introduction",
    "Horizon",
    "PartitionCell",
    "pattern_from_bits",
    "pattern_bits",
    "pattern_to_str",
    "pattern_from_str",
    "footprint",
    "footprints",
    "union_length",
    "horizon_area",
    "horizon_partition",
    "partition_areas",
    "sample_uniform_horizon",
    "sample_horizon_points",
]


@dataclass(frozen=True)
class TransectLayout:
    """Quadrat ``i`` spans ``[pitch * i, pitch * i + quadrat_width]``."""

    quadrat_count: int = 6
    quadrat_width: float = 0.25
    pitch: float = 10.0

    def __post_init__(self):
        if self.quadrat_count < 1:
            raise ValueError("quadrat_count must be >= 1")
        if not 0 < self.quadrat_width < self.pitch:
            raise ValueError("need 0 < quadrat_width < pitch")

    @property
    def gap(self) -> float:
        return self.pitch - self.quadrat_width

    @property
    def length(self) -> float:
        """Distance from the start of the first quadrat to the end of the last."""
        return (self.quadrat_count - 1) * self.pitch + self.quadrat_width

    @property
    def midpoint(self) -> float:
        return 0.5 * self.length

    @property
    def full_pattern(self) -> int:
        return (1 << self.quadrat_count) - 1

    def quadrats(self) -> list[tuple[float, float]]:
        return [(i * self.pitch, i * self.pitch + self.quadrat_width)
                for i in range(self.quadrat_count)]

    def block_mask(self, first: int, last: int) -> int:
        """Pattern with quadrats ``first..last`` (inclusive) occupied."""
        n = self.quadrat_count
        return ((1 << (last - first + 1)) - 1) << (n - 1 - last)


DEFAULT_LAYOUT = TransectLayout()


class Introduction(NamedTuple):
    s: float
    t: float


# -- patterns ---------------------------------------------------------------

def pattern_from_bits(bits) -> int:
    value = 0
    for b in bits:
        if b not in (0, 1, True, False):
            raise ValueError(f"pattern bits must be 0/1, got {b!r}")
        value = (value << 1) | int(b)
    return value


def pattern_bits(pattern: int, n: int = 6) -> tuple[int, ...]:
    return tuple((pattern >> (n - 1 - i)) & 1 for i in range(n))


def pattern_to_str(pattern: int, n: int = 6) -> str:
    return format(pattern, f"0{n}b")


def pattern_from_str(text: str) -> int:
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a binary pattern: {text!r}")
    return int(text, 2)


# -- footprints -------------------------------------------------------------

def _check_args(nu, T):
    if nu < 0:
        raise ValueError(f"spread rate must be non-negative, got {nu}")
    if T < 0:
        raise ValueError(f"road age must be non-negative, got {T}")


def footprint(s: float, t: float, nu: float, T: float,
              layout: TransectLayout = DEFAULT_LAYOUT) -> int:
    """Quadrats touched at time ``T`` by spread from an introduction at ``(s, t)``.

    Boundary contact counts as presence.

    >>> pattern_to_str(footprint(5.0, 0.0, 2.0, 3.0))
    '110000'
    """
    _check_args(nu, T)
    if not 0.0 <= t <= T:
        raise ValueError(f"introduction time {t} outside [0, {T}]")
    return _footprint(s, nu * (T - t), layout)


def _footprint(s: float, r: float, layout: TransectLayout) -> int:
    # quadrat i is touched iff pitch*i - r <= s <= pitch*i + width + r
    p = layout.pitch
    n = layout.quadrat_count
    first = math.ceil((s - r - layout.quadrat_width) / p)
    last = math.floor((s + r) / p)
    if first < 0:
        first = 0
    if last > n - 1:
        last = n - 1
    if first > last:
        return 0
    return (((1 << (last - first + 1)) - 1) << (n - 1 - last))


def footprints(s, r, layout: TransectLayout = DEFAULT_LAYOUT) -> np.ndarray:
    """Vectorised footprints for positions ``s`` and spread radii ``r``."""
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    n = layout.quadrat_count
    first = np.ceil((s - r - layout.quadrat_width) / layout.pitch)
    last = np.floor((s + r) / layout.pitch)
    first = np.clip(first, 0, n).astype(np.int64)
    last = np.clip(last, -1, n - 1).astype(np.int64)
    width = last - first + 1
    ok = width > 0
    width = np.where(ok, width, 0)
    mask = ((np.int64(1) << width) - 1) << np.where(ok, n - 1 - last, 0)
    return np.where(ok, mask, 0)


# -- areas ------------------------------------------------------------------

def union_length(r, layout: TransectLayout = DEFAULT_LAYOUT):
    """Length of the union of quadrats each widened by ``r`` on both sides."""
    n = layout.quadrat_count
    return layout.length + 2.0 * np.asarray(r) - (n - 1) * np.maximum(0.0, layout.gap - 2.0 * np.asarray(r))


def horizon_area(nu, T, layout: TransectLayout = DEFAULT_LAYOUT):
    """Area (m*yr) of the set of introductions with a nonempty footprint.

    The cross-section at elapsed time ``tau = T - t`` is the union of the
    quadrats widened by ``r = nu * tau``.  Its length is affine in ``r`` on
    either side of the single merge radius ``gap / 2``, so the time integral is
    closed form.  Accepts scalars or broadcastable arrays.
    """
    nu_a = np.asarray(nu, dtype=float)
    T_a = np.asarray(T, dtype=float)
    if np.any(nu_a < 0) or np.any(T_a < 0):
        raise ValueError("spread rate and road age must be non-negative")
    n = layout.quadrat_count
    gap = layout.gap
    R = nu_a * T_a
    m = np.minimum(R, 0.5 * gap)
    with np.errstate(divide="ignore", invalid="ignore"):
        merged = layout.length * T_a + nu_a * T_a**2 - (n - 1) * (gap * m - m * m) / nu_a
    still = n * layout.quadrat_width * T_a + n * nu_a * T_a**2
    area = np.where(R < 0.5 * gap, still, merged)
    if area.ndim == 0:
        return float(area)
    return area


@dataclass(frozen=True)
class PartitionCell:
    footprint: int
    area: float


def _block_measure_terms(first, last, layout):
    """Constants of the bounds on ``s`` for footprint block ``first..last``.

    The set of ``s`` giving exactly this block at radius ``r`` is
    ``max(lower) <= s <= min(upper)`` where each bound is ``c + r`` or ``c - r``.
    """
    p, w, n = layout.pitch, layout.quadrat_width, layout.quadrat_count
    upper_plus = [first * p + w]          # still touches `first`
    upper_minus = []                      # misses last + 1
    lower_minus = [last * p]              # touches `last`
    lower_plus = []                       # misses first - 1
    if last < n - 1:
        upper_minus.append((last + 1) * p)
    if first > 0:
        lower_plus.append((first - 1) * p + w)
    return upper_plus, upper_minus, lower_plus, lower_minus


def _block_measure(r, terms):
    up, um, lp, lm = terms
    upper = min([c + r for c in up] + [c - r for c in um])
    lower = max([c + r for c in lp] + [c - r for c in lm])
    return max(0.0, upper - lower)


def horizon_partition(nu: float, T: float,
                      layout: TransectLayout = DEFAULT_LAYOUT) -> list[PartitionCell]:
    """Exact area of every footprint class in the horizon.

    For each contiguous block the ``s``-measure is a max/min of lines of slope
    +-1 in ``r``; its kinks sit where a ``+r`` bound meets a ``-r`` bound.  The
    measure is integrated exactly over elapsed time ``[0, T]`` by the trapezoid
    rule on those breakpoints.  Cells are returned in increasing footprint order.
    """
    _check_args(nu, T)
    n = layout.quadrat_count
    R = nu * T
    cells = []
    for first in range(n):
        for last in range(first, n):
            terms = _block_measure_terms(first, last, layout)
            up, um, lp, lm = terms
            # integrate over elapsed time; breakpoints x in r sit at tau = x / nu
            taus = {0.0, T}
            for cp in up + lp:
                for cm in um + lm:
                    x = 0.5 * (cm - cp)
                    if 0.0 < x < R:
                        taus.add(min(x / nu, T))
            taus = sorted(taus)
            vals = [_block_measure(nu * tau, terms) for tau in taus]
            area = 0.0
            for i in range(len(taus) - 1):
                area += 0.5 * (vals[i] + vals[i + 1]) * (taus[i + 1] - taus[i])
            if area > 0.0:
                cells.append(PartitionCell(layout.block_mask(first, last), area))
    cells.sort(key=lambda c: c.footprint)
    return cells


class _BlockIntegral:
    """``F(R) = integral of the s-measure of one block over r in [0, R]``, any ``R >= 0``.

    The kinks of the measure do not depend on ``nu`` or ``T``, so ``F`` is a
    fixed piecewise quadratic; evaluating it is a table lookup.
    """

    def __init__(self, first, last, layout):
        terms = _block_measure_terms(first, last, layout)
        up, um, lp, lm = terms
        knots = {0.0}
        for cp in up + lp:
            for cm in um + lm:
                x = 0.5 * (cm - cp)
                if x > 0.0:
                    knots.add(x)
        k = np.array(sorted(knots))
        m = np.array([_block_measure(x, terms) for x in k])
        slope = np.empty_like(k)
        slope[:-1] = np.diff(m) / np.diff(k)
        slope[-1] = _block_measure(k[-1] + 1.0, terms) - m[-1]
        F = np.concatenate([[0.0], np.cumsum(0.5 * (m[:-1] + m[1:]) * np.diff(k))])
        self.footprint = layout.block_mask(first, last)
        self.knots, self.m, self.slope, self.F = k, m, slope, F

    def __call__(self, R):
        j = np.searchsorted(self.knots, R, side="right") - 1
        d = R - self.knots[j]
        return self.F[j] + self.m[j] * d + 0.5 * self.slope[j] * d * d


@lru_cache(maxsize=8)
def _block_integrals(layout: TransectLayout):
    n = layout.quadrat_count
    return tuple(_BlockIntegral(a, b, layout) for a in range(n) for b in range(a, n))


def partition_areas(nu, T: float, layout: TransectLayout = DEFAULT_LAYOUT):
    """Vectorised cell areas for many spread rates at one road age.

    Returns ``(footprints, areas)`` where ``footprints`` lists every
    contiguous block and ``areas[..., j]`` is the area of its cell for each
    entry of ``nu`` (zero where the cell is empty).
    """
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0) or T < 0:
        raise ValueError("spread rate and road age must be non-negative")
    blocks = _block_integrals(layout)
    R = nu * T
    pos = nu > 0
    safe = np.where(pos, nu, 1.0)
    # on the first linear piece F(R) / nu = T (m0 + slope0 R / 2); avoids dividing tiny numbers
    areas = np.stack([np.where(R < b.knots[1] if b.knots.size > 1 else True,
                               T * (b.m[0] + 0.5 * b.slope[0] * R), b(R) / safe)
                      for b in blocks], axis=-1)
    return np.array([b.footprint for b in blocks], dtype=np.int64), np.maximum(areas, 0.0)


@dataclass(frozen=True)
class Horizon:
    """Introduction region ``H(nu, T)`` for one road."""

    nu: float
    T: float
    layout: TransectLayout = DEFAULT_LAYOUT

    def __post_init__(self):
        _check_args(self.nu, self.T)
        if self.T == 0:
            raise ValueError("road age must be positive")

    @cached_property
    def area(self) -> float:
        return horizon_area(self.nu, self.T, self.layout)

    @cached_property
    def partition(self) -> list[PartitionCell]:
        return horizon_partition(self.nu, self.T, self.layout)

    def contains(self, s: float, t: float) -> bool:
        return 0.0 <= t <= self.T and _footprint(s, self.nu * (self.T - t), self.layout) != 0

    def footprint(self, s: float, t: float) -> int:
        return footprint(s, t, self.nu, self.T, self.layout)

    def sample(self, rng: np.random.Generator) -> Introduction:
        return sample_uniform_horizon(rng, self.nu, self.T, self.layout)


# -- uniform sampling -------------------------------------------------------

def _horizon_area(nu: float, T: float, layout: TransectLayout) -> float:
    """Scalar fast path of :func:`horizon_area` for the sampler loops."""
    n = layout.quadrat_count
    half_gap = 0.5 * layout.gap
    R = nu * T
    if R < half_gap:
        return n * layout.quadrat_width * T + n * nu * T * T
    return layout.length * T + nu * T * T - (n - 1) * half_gap * half_gap / nu


def _elapsed_from_area(y, nu, T, layout):
    """Elapsed time ``tau`` at which the horizon area swept from ``tau = 0`` reaches ``y``.

    The swept area is quadratic in ``tau`` on either side of the merge time
    ``gap / (2 nu)``; each piece is inverted with the cancellation-free root
    ``2c / (b + sqrt(b**2 + 4 a c))``.  Works elementwise on arrays.
    """
    n = layout.quadrat_count
    w = layout.quadrat_width
    h = 0.5 * layout.gap
    with np.errstate(divide="ignore", invalid="ignore"):
        tau_h = np.where(nu > 0, h / np.where(nu > 0, nu, 1.0), np.inf)
    tau_h = np.minimum(tau_h, T)
    a1 = n * w * tau_h + n * nu * tau_h**2
    b = n * w
    early = 2.0 * y / (b + np.sqrt(b * b + 4.0 * n * nu * y))
    c = y - a1 + layout.length * tau_h + nu * tau_h**2
    bl = layout.length
    late = 2.0 * c / (bl + np.sqrt(bl * bl + 4.0 * nu * c))
    return np.minimum(np.where(y <= a1, early, late), T)


def sample_uniform_horizon(rng: np.random.Generator, nu: float, T: float,
                           layout: TransectLayout = DEFAULT_LAYOUT) -> Introduction:
    """Draw one introduction uniformly over ``H(nu, T)``.

    The elapsed time ``tau = T - t`` has density proportional to the
    cross-section length and is drawn by inverting its (piecewise quadratic)
    distribution function; given ``tau`` the position is uniform over the
    union of widened quadrats.
    """
    if T <= 0 or nu < 0:
        raise ValueError("need T > 0 and nu >= 0")
    n = layout.quadrat_count
    tau = float(_elapsed_from_area(rng.random() * _horizon_area(nu, T, layout), nu, T, layout))
    r = nu * tau
    u = rng.random()
    if 2.0 * r >= layout.gap:
        s = -r + u * (layout.length + 2.0 * r)
    else:
        # one of n disjoint intervals of equal length, then uniform within it
        x = u * n
        i = min(int(x), n - 1)
        s = i * layout.pitch - r + (x - i) * (layout.quadrat_width + 2.0 * r)
    return Introduction(s, T - tau)


def sample_horizon_points(rng: np.random.Generator, nu, T, size=None,
                          layout: TransectLayout = DEFAULT_LAYOUT):
    """Vectorised version of :func:`sample_uniform_horizon`.

    ``nu`` and ``T`` may be arrays (one horizon per point); returns ``(s, t)``.
    """
    nu = np.asarray(nu, dtype=float)
    T = np.asarray(T, dtype=float)
    if size is None:
        size = np.broadcast(nu, T).shape
    nu = np.broadcast_to(nu, size).ravel()
    T = np.broadcast_to(T, size).ravel()
    m = nu.size
    y = rng.random(m) * horizon_area(nu, T, layout)
    tau = _elapsed_from_area(y, nu, T, layout)
    r = nu * tau
    u = rng.random(m)
    n = layout.quadrat_count
    x = u * n
    i = np.minimum(np.floor(x), n - 1)
    s = np.where(2.0 * r >= layout.gap,
                 -r + u * (layout.length + 2.0 * r),
                 i * layout.pitch - r + (x - i) * (layout.quadrat_width + 2.0 * r))
    t = T - tau
    return s.reshape(size), t.reshape(size)


def _grouped_horizon_points(rng: np.random.Generator, nu, T: float, counts, area,
                            layout: TransectLayout = DEFAULT_LAYOUT):
    """Draw ``counts[j]`` uniform points on horizon ``j`` with spread ``nu[j]``, all of age ``T``.

    Same distribution as :func:`sample_horizon_points`; per-horizon constants
    are computed once and only the branch each point needs is evaluated.
    Returns ``(owner, s, tau)``: the horizon index, position and elapsed
    time ``T - t`` of every point.
    """
    n = layout.quadrat_count
    h = 0.5 * layout.gap
    tau_h = np.full(nu.shape, float(T))
    pos = nu > 0
    tau_h[pos] = np.minimum(h / nu[pos], T)
    a1 = n * layout.quadrat_width * tau_h + n * nu * tau_h**2
    c0 = layout.length * tau_h + nu * tau_h**2 - a1
    owner = np.repeat(np.arange(nu.size), counts)
    nu_p = nu[owner]
    y = rng.random(owner.size) * area[owner]
    u = rng.random(owner.size)
    b = n * layout.quadrat_width
    bl = layout.length
    c = y + c0[owner]
    tau = np.where(y <= a1[owner],
                   2.0 * y / (b + np.sqrt(b * b + (4.0 * n) * nu_p * y)),
                   2.0 * c / (bl + np.sqrt(bl * bl + 4.0 * nu_p * c)))
    np.minimum(tau, T, out=tau)
    r = nu_p * tau
    x = u * n
    i = np.minimum(np.floor(x), n - 1)
    s = np.where(2.0 * r >= layout.gap,
                 -r + u * (bl + 2.0 * r),
                 i * layout.pitch - r + (x - i) * (layout.quadrat_width + 2.0 * r))
    return owner, s, tau
