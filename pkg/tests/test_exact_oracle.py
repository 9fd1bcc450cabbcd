import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdabc.geometry import horizon_area, horizon_partition
from tdabc.exact_oracle import (LikelihoodTable, exact_likelihood, exact_posterior_grid, exact_summary_likelihood,
                          grid_tv_distance, mc_likelihood)
from tdabc.summaries import achievable_summaries, summary_fiber


def enumerate_occupancy(nu, T, lam):
    """P(Y) by summing over which cells are occupied (independent Poisson counts)."""
    cells = horizon_partition(nu, T)
    q = [math.exp(-lam * c.area) for c in cells]
    probs = np.zeros(64)
    for occ in itertools.product((0, 1), repeat=len(cells)):
        y = 0
        p = 1.0
        for o, c, qc in zip(occ, cells, q):
            if o:
                y |= c.footprint
                p *= 1.0 - qc
            else:
                p *= qc
        probs[y] += p
    return probs


@pytest.mark.parametrize("nu,T,lam", [(3.0, 2.0, 0.01), (3.0, 2.0, 0.2), (0.0, 5.0, 0.3), (1.0, 1.0, 0.05)])
def test_matches_occupancy_enumeration(nu, T, lam):
    ref = enumerate_occupancy(nu, T, lam)
    got = np.array([exact_likelihood(y, lam, nu, T) for y in range(64)])
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-14)


def test_frozen_values():
    # independent values from the occupancy enumeration above
    assert exact_likelihood(0, 0.01, 1.0, 2.0) == pytest.approx(math.exp(-0.27), rel=1e-13)
    a = 0.25 * 4.0   # each quadrat's cell at zero spread
    assert exact_likelihood(0b100000, 0.3, 0.0, 4.0) == pytest.approx((1 - math.exp(-0.3 * a)) * math.exp(-1.5 * a),
                                                                     rel=1e-12)
    assert exact_likelihood(0b110000, 0.02, 3.0, 2.0) == pytest.approx(0.019866219788361, rel=1e-12)


@given(st.floats(0.0, 20.0), st.floats(1.0, 56.0), st.floats(1e-5, 0.5))
def test_probabilities_sum_to_one(nu, T, lam):
    p = np.array([exact_likelihood(y, lam, nu, T) for y in range(64)])
    assert np.all(p >= 0) and np.all(p <= 1)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)


def test_vectorised_over_rate():
    lam = np.array([1e-3, 1e-2, 0.1])
    v = exact_likelihood(0b011000, lam, 4.0, 3.0)
    assert v.shape == (3,)
    assert np.allclose(v, [exact_likelihood(0b011000, x, 4.0, 3.0) for x in lam])
    with pytest.raises(ValueError):
        exact_likelihood(0, 0.0, 1.0, 1.0)


def test_summary_likelihood_sums_fiber():
    for s in achievable_summaries():
        tot = sum(exact_likelihood(y, 0.05, 2.0, 3.0) for y in summary_fiber(s))
        assert exact_summary_likelihood(s, 0.05, 2.0, 3.0) == pytest.approx(tot, rel=1e-12)
    with pytest.raises(ValueError):
        exact_summary_likelihood((4, 6), 0.05, 2.0, 3.0)


def test_table_area():
    t = LikelihoodTable(5.0, 8.0)
    assert t.area == pytest.approx(horizon_area(5.0, 8.0), rel=1e-12)


def test_mc_agrees(rng):
    p, se = mc_likelihood(rng, 0b110000, 0.02, 3.0, 2.0, 200_000)
    assert abs(p - exact_likelihood(0b110000, 0.02, 3.0, 2.0)) < 4 * se
    with pytest.raises(ValueError):
        mc_likelihood(rng, 0, 0.02, 3.0, 2.0, 0)


def test_posterior_grid_single_road():
    grid = np.linspace(0.001, 0.3, 300)
    w = exact_posterior_grid([0b110000], [2.0], 3.0, grid)
    like = exact_summary_likelihood((1, 2), grid, 3.0, 2.0)
    ref = np.exp(-grid) * like
    assert np.allclose(w, ref / ref.sum(), rtol=1e-12)
    assert w.sum() == pytest.approx(1.0)


def test_posterior_grid_injected_likelihood():
    grid = np.array([1.0, 2.0, 3.0])
    w = exact_posterior_grid([(1, 1)], [1.0], 1.0, grid, log_prior=lambda g: np.zeros_like(g),
                             summary_likelihood=lambda s, lam, nu, T: lam)
    assert np.allclose(w, grid / grid.sum())


def test_posterior_grid_errors():
    with pytest.raises(ValueError):
        exact_posterior_grid([0], [1.0], 1.0, [])
    with pytest.raises(ValueError):
        exact_posterior_grid([0], [1.0, 2.0], 1.0, [0.1])
    with pytest.raises(ValueError):
        exact_posterior_grid([0], [1.0], 1.0, [-0.1, 0.1])


def test_tv_distance():
    grid = np.array([0.0, 1.0, 2.0])
    assert grid_tv_distance([0.0, 1.0, 2.0, 2.0], grid, [0.25, 0.25, 0.5]) == pytest.approx(0.0)
    assert grid_tv_distance([0.0, 0.0], grid, [0.0, 0.0, 1.0]) == pytest.approx(1.0)
    assert grid_tv_distance([10.0], grid, [1.0, 0.0, 0.0]) == pytest.approx(1.0)
