"""Run/count summary of a presence pattern and the ABC discrepancy kernels."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = ["Summary", "summarize", "kernel_eval", "kernel_table", "summary_fiber",
           "achievable_summaries", "KERNELS"]

KERNELS = ("indicator", "gaussian")


class Summary(NamedTuple):
    runs: int
    ones: int


def _summarize(pattern: int) -> Summary:
    ones = bin(pattern).count("1")
    # a run starts at every 1 whose left neighbour (next higher bit) is 0
    starts = pattern & ~(pattern >> 1)
    return Summary(bin(starts).count("1"), ones)


_TABLE6 = tuple(_summarize(p) for p in range(64))


def summarize(pattern: int, n: int = 6) -> Summary:
    """(number of maximal runs of 1s, number of 1s).

    >>> summarize(0b110010)
    Summary(runs=2, ones=3)
    """
    if n == 6 and 0 <= pattern < 64:
        return _TABLE6[pattern]
    if not 0 <= pattern < (1 << n):
        raise ValueError(f"pattern {pattern} out of range for {n} quadrats")
    return _summarize(pattern)


def kernel_eval(a, b, epsilon: float = 0.0, kind: str = "indicator") -> float:
    """Kernel weight ``K_eps[a, b]`` between two summaries."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if kind == "indicator":
        if epsilon == 0:
            return 1.0 if tuple(a) == tuple(b) else 0.0
        dist = max(abs(x - y) for x, y in zip(a, b))
        return 1.0 if dist <= epsilon else 0.0
    if kind == "gaussian":
        if epsilon == 0:
            raise ValueError("gaussian kernel needs epsilon > 0")
        d2 = sum((x - y) ** 2 for x, y in zip(a, b))
        return math.exp(-d2 / (2.0 * epsilon**2))
    raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KERNELS}")


def kernel_table(observed: int, epsilon: float = 0.0, kind: str = "indicator",
                 n: int = 6) -> np.ndarray:
    """Kernel weight of every simulated pattern against one observed pattern.

    Indexing this table by a simulated pattern replaces the kernel call in the
    samplers' inner loops.
    """
    s_obs = summarize(observed, n)
    return np.array([kernel_eval(summarize(p, n), s_obs, epsilon, kind)
                     for p in range(1 << n)])


def summary_fiber(s, n: int = 6) -> list[int]:
    """All patterns whose summary equals ``s``, in increasing order."""
    s = Summary(*s)
    return [p for p in range(1 << n) if summarize(p, n) == s]


def achievable_summaries(n: int = 6) -> list[Summary]:
    return sorted({summarize(p, n) for p in range(1 << n)})
