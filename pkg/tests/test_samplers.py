import math

import numpy as np
import pytest
from scipy import integrate, stats

from tdabc.geometry import Introduction, footprint, horizon_area
from tdabc.model import Dataset, RoadRecord, RoadState, TemporalData
from tdabc.samplers import (ChainConfig, DegenerateDataError, InitializationError, NoMatchError,
                            birth_death_ratio, birth_death_step, gibbs_lambda, gibbs_sigma2, initialize_road,
                            position_move, rejection_abc, run_chain, sample_nu_given_z, td_accept_ratio)
from tdabc.summaries import kernel_table, summarize

ONES = [1.0] * 64


def small_dataset(pattern=0b110000, age=2.0):
    return Dataset((RoadRecord(1, 1, age, pattern),), TemporalData(np.array([2.5, 3.5, 3.0])))


def road_with(points, nu, T):
    st = RoadState()
    for s, t in points:
        f = footprint(s, t, nu, T)
        st.introductions.append(Introduction(s, t))
        st.footprints.append(f)
        st.simulated |= f
    return st


@pytest.mark.parametrize("move,k,mu,expected", [(1, 0, 2.0, 2.0), (1, 2, 3.0, 1.0), (-1, 3, 1.5, 2.0),
                                                (-1, 0, 1.0, 0.0), (0, 4, 9.0, 1.0)])
def test_birth_death_ratio_values(move, k, mu, expected):
    assert birth_death_ratio(move, k, mu) == pytest.approx(expected)


def test_birth_death_ratio_kernel_terms():
    assert birth_death_ratio(1, 1, 4.0, 0.5, 1.0) == pytest.approx(1.0)
    assert birth_death_ratio(1, 1, 4.0, 0.0, 1.0) == 0.0
    assert birth_death_ratio(1, 1, 4.0, 1.0, 0.0) == math.inf
    with pytest.raises(ValueError):
        birth_death_ratio(2, 1, 1.0)


@pytest.mark.parametrize("k", [0, 1, 4])
@pytest.mark.parametrize("mu", [0.3, 2.0, 7.0])
def test_generic_ratio_reduces_to_birth_death(k, mu):
    A = 37.0
    lam = mu / A
    # ordered-prior ratio and proposal densities of a birth from k points
    lp_new = (k + 1) * math.log(lam) - math.lgamma(k + 2)
    lp_old = k * math.log(lam) - math.lgamma(k + 1)
    q_rev = math.log(1 / 3) - math.log(k + 1)
    q_fwd = math.log(1 / 3) - math.log(A) - math.log(k + 1)
    a = td_accept_ratio(0.8, 0.5, lp_new, lp_old, q_rev, q_fwd)
    assert a == pytest.approx(birth_death_ratio(1, k, mu, 0.8, 0.5), rel=1e-12)
    # and the death back from k + 1
    d = td_accept_ratio(0.5, 0.8, lp_old, lp_new, q_fwd, q_rev)
    assert d == pytest.approx(birth_death_ratio(-1, k + 1, mu, 0.5, 0.8), rel=1e-12)


def test_td_accept_ratio_edges():
    assert td_accept_ratio(0.0, 1.0, 0, 0, 0, 0) == 0.0
    assert td_accept_ratio(1.0, 0.0, 0, 0, 0, 0) == math.inf
    assert td_accept_ratio(1.0, 1.0, 0, 0, 0, 0, jacobian=2.0) == 2.0
    with pytest.raises(ValueError):
        td_accept_ratio(1.0, 1.0, 0, 0, 0, 0, jacobian=0.0)


def test_birth_death_step_rates(rng):
    nu, T = 3.0, 2.0
    A = horizon_area(nu, T)
    mu = 1.0
    pts = [(10.1, 2.0), (30.0, 0.5)]
    n = 30_000
    births = deaths = 0
    for _ in range(n):
        st = road_with(pts, nu, T)
        if birth_death_step(rng, st, mu / A, nu, T, ONES):
            births += st.k == 3
            deaths += st.k == 1
        st.check(nu, T)
    # birth: 1/3 * min(1, mu/3); death: 1/3 * min(1, 2/mu)
    assert abs(births / n - 1 / 9) < 4 * math.sqrt((1 / 9) * (8 / 9) / n)
    assert abs(deaths / n - 1 / 3) < 4 * math.sqrt((1 / 3) * (2 / 3) / n)


def test_birth_death_respects_kernel(rng):
    nu, T = 3.0, 2.0
    kern = kernel_table(0b110000)
    st = road_with([(5.0, 0.0)], nu, T)
    assert st.simulated == 0b110000
    for _ in range(2000):
        birth_death_step(rng, st, 0.05, nu, T, kern)
        position_move(rng, st, nu, T, kern)
        assert summarize(st.simulated) == (1, 2)
        st.check(nu, T)


def test_position_move_keeps_points_in_horizon(rng):
    nu, T = 1.0, 5.0
    st = road_with([(10.1, 4.0), (40.0, 1.0)], nu, T)
    moved = sum(position_move(rng, st, nu, T, ONES) for _ in range(3000))
    assert 0 < moved < 3000
    st.check(nu, T)
    assert not position_move(rng, RoadState(), nu, T, ONES)


def test_gibbs_errors(rng):
    with pytest.raises(DegenerateDataError):
        gibbs_sigma2(rng, 2.0, [2.0, 2.0])
    with pytest.raises(ValueError):
        gibbs_sigma2(rng, 2.0, [2.0])
    with pytest.raises(ValueError):
        gibbs_lambda(rng, 0, 0.0)


def test_nu_given_z_matches_numeric_marginal(rng):
    z = np.array([1.0, 3.5, 0.4, 2.2])
    n, zbar = z.size, z.mean()
    s_min = np.sum((z - zbar) ** 2)

    def dens(v):
        return stats.norm(10, 10).pdf(v) * (s_min + n * (v - zbar) ** 2) ** (-n / 2)

    x = np.linspace(0.0, 60.0, 600_001)
    c = integrate.cumulative_trapezoid(dens(x), x, initial=0.0)
    c /= c[-1]
    draws = sample_nu_given_z(rng, z, 20_000)
    assert draws.min() > 0
    assert stats.kstest(draws, lambda v: np.interp(v, x, c)).pvalue > 1e-3


def test_initialize_road(rng):
    kern = kernel_table(0b101000)
    st = initialize_road(rng, 3.0, 2.0, kern)
    assert summarize(st.simulated) == (2, 2)
    st.check(3.0, 2.0)
    with pytest.raises(InitializationError):
        initialize_road(rng, 3.0, 2.0, [0.0] * 64, max_attempts=50)


@pytest.mark.parametrize("kw", [dict(iterations=0), dict(burn_in=10, iterations=10), dict(epsilon=-1),
                                dict(kernel="box"), dict(kernel="gaussian"), dict(nu_update_mode="x"),
                                dict(position_move_scale=(1.0, 0.0)), dict(fixed_nu=0.0), dict(batch_size=0),
                                dict(seed=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ChainConfig(**kw)


def test_chain_is_deterministic_and_consistent():
    ds = Dataset((RoadRecord(1, 1, 20.0, 0b110010), RoadRecord(1, 2, 12.0, 0), RoadRecord(2, 1, 30.0, 0b111111)),
                 TemporalData(np.array([3.0, 4.5, 2.5, 3.8])))
    cfg = ChainConfig(iterations=3000, burn_in=500, seed=9, record_latents=True)
    flushes = []
    a = run_chain(None, ds, cfg, on_record=lambda stop, tr: flushes.append(stop), record_every=1000)
    b = run_chain(None, ds, cfg)
    assert flushes == [1000, 2000, 2500]
    assert np.array_equal(a.lambdas, b.lambdas) and np.array_equal(a.nu, b.nu) and np.array_equal(a.k, b.k)
    assert len(a) == 2500 and a.lambdas.shape == (2500, 2)
    assert a.columns == ["lambda_1", "lambda_2", "nu", "sigma2", "k_1_1", "k_1_2", "k_2_1"]
    for i in (0, 1234, 2499):
        for j, (rec, pts) in enumerate(zip(ds.roads, a.latents[i])):
            assert len(pts) == a.k[i, j]
            st = road_with(pts, a.nu[i], rec.age)
            assert summarize(st.simulated) == summarize(rec.observed)
    assert a.stats["nu_accepted"] > 0
    assert np.all(a.nu > 0) and np.all(a.sigma2 > 0) and np.all(a.lambdas > 0)


def test_chain_paper_gibbs_mode():
    cfg = ChainConfig(iterations=2000, burn_in=100, seed=3, nu_update_mode="paper_gibbs")
    tr = run_chain(None, small_dataset(), cfg)
    assert len(np.unique(tr.nu)) > 100


def test_chain_fixed_nu():
    tr = run_chain(None, small_dataset(), ChainConfig(iterations=500, burn_in=0, fixed_nu=3.0))
    assert np.all(tr.nu == 3.0)


def test_rejection_deterministic_and_fills_trace():
    cfg = ChainConfig(iterations=30_000, burn_in=1000, seed=4, fixed_nu=3.0, batch_size=7000)
    a = rejection_abc(None, small_dataset(), cfg)
    b = rejection_abc(None, small_dataset(), cfg)
    assert np.array_equal(a.lambdas, b.lambdas) and np.array_equal(a.k, b.k)
    assert len(a) == 29_000
    assert np.all(a.nu == 3.0)
    assert 0 < a.stats["accepted"] < 30_000
    # keep-previous-state rule: values repeat between acceptances
    assert len(np.unique(a.lambdas[:, 0])) <= a.stats["accepted"] + 1
    assert np.all(a.k >= 1)


def test_rejection_latents_match_data():
    cfg = ChainConfig(iterations=5000, burn_in=0, seed=2, record_latents=True, batch_size=1000)
    tr = rejection_abc(None, small_dataset(), cfg)
    for i in (0, 2500, 4999):
        (pts,) = tr.latents[i]
        assert len(pts) == tr.k[i, 0]
        st = road_with(pts, tr.nu[i], 2.0)
        assert summarize(st.simulated) == (1, 2)


def test_rejection_no_match():
    ds = Dataset((RoadRecord(1, 1, 50.0, 0b101010),), TemporalData(np.array([20.0, 21.0])))
    with pytest.raises(NoMatchError):
        rejection_abc(None, ds, ChainConfig(iterations=10, burn_in=0, init_max_attempts=200, batch_size=100))
