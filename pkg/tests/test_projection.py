import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import synthetic_network
from tdabc.projection import (HabitatRaster, RoadNetwork, RoadSegment, buffer_mask, project, seed_points)


def test_straight_segment_points():
    net = RoadNetwork((RoadSegment("a", 10.0, ((0.0, 0.0), (100.0, 0.0))),))
    pts = seed_points(net, 10.0)
    assert len(pts) == 11
    assert [p.x for p in pts] == pytest.approx(np.arange(0, 101, 10.0))
    assert all(p.age == 10.0 for p in pts)


def test_spacing_longer_than_segment():
    net = RoadNetwork((RoadSegment("a", 3.0, ((0.0, 0.0), (30.0, 40.0))),))
    pts = seed_points(net, 1000.0)
    assert [(p.x, p.y) for p in pts] == [(0.0, 0.0), (30.0, 40.0)]


def test_polyline_walk_crosses_vertices():
    net = RoadNetwork((RoadSegment("a", 3.0, ((0.0, 0.0), (5.0, 0.0), (5.0, 15.0))),))
    pts = seed_points(net, 10.0)
    assert [(p.x, p.y) for p in pts] == [(0.0, 0.0), (5.0, 5.0), (5.0, 15.0)]


def test_disjoint_segments_independent():
    a = RoadSegment("a", 3.0, ((0.0, 0.0), (20.0, 0.0)))
    b = RoadSegment("b", 7.0, ((100.0, 100.0), (100.0, 125.0)))
    both = seed_points(RoadNetwork((a, b)))
    assert both == seed_points(RoadNetwork((a,))) + seed_points(RoadNetwork((b,)))


def test_degenerate_segment_skipped(caplog):
    net = RoadNetwork((RoadSegment("z", 3.0, ((1.0, 1.0), (1.0, 1.0))),))
    assert seed_points(net) == []
    assert "zero length" in caplog.text


def test_type_validation():
    with pytest.raises(ValueError):
        RoadSegment("a", 3.0, ((0.0, 0.0),))
    with pytest.raises(ValueError):
        RoadSegment("a", 0.0, ((0.0, 0.0), (1.0, 1.0)))
    with pytest.raises(ValueError):
        HabitatRaster((0, 0), 0.0, np.ones((2, 2)))
    with pytest.raises(ValueError):
        HabitatRaster((0, 0), 1.0, np.ones((0, 2)))
    with pytest.raises(ValueError):
        seed_points(RoadNetwork(()), 0.0)


def disk_oracle(habitat, cx, cy, r):
    ny, nx = habitat.shape
    out = np.zeros((ny, nx), dtype=bool)
    for i in range(ny):
        for j in range(nx):
            x = habitat.origin[0] + (j + 0.5) * habitat.cell_size
            y = habitat.origin[1] + (i + 0.5) * habitat.cell_size
            out[i, j] = (x - cx) ** 2 + (y - cy) ** 2 <= r * r
    return out


@given(st.floats(-5, 45), st.floats(-5, 45), st.floats(0, 20))
def test_buffer_mask_matches_exhaustive_check(cx, cy, r):
    h = HabitatRaster((-2.0, 1.0), 2.0, np.ones((20, 22)))
    assert np.array_equal(buffer_mask(h, [(cx, cy)], [r]), disk_oracle(h, cx, cy, r))


def test_forced_invasion_at_centre():
    h = HabitatRaster((0.0, 0.0), 1.0, np.ones((41, 41)))
    # T = 1, nu = 3 cells/yr; huge rate forces invasion, t = u2 * T -> radius nu*T*(1-u2)
    rng = np.random.default_rng(0)
    res = project(rng, [(20.5, 20.5, 1.0)], h, lam=1e6, nu=3.0)
    (x, y, t, r), = res.introductions
    assert r == pytest.approx(3.0 * (1.0 - t))
    assert res.invaded_cells == disk_oracle(h, 20.5, 20.5, r).sum()
    # lattice points with x**2 + y**2 <= 9
    exact = buffer_mask(h, [(20.5, 20.5)], [3.0])
    assert exact.sum() == 29
    assert np.array_equal(exact, disk_oracle(h, 20.5, 20.5, 3.0))


def test_unsuitable_never_invaded(rng):
    grid = rng.random((50, 50)) < 0.5
    h = HabitatRaster((0.0, 0.0), 10.0, grid)
    pts = [(250.0, 250.0, 40.0), (100.0, 400.0, 30.0)]
    res = project(rng, pts, h, lam=1.0, nu=5.0)
    assert not np.any(res.invaded & ~grid)
    assert res.fraction == pytest.approx(res.invaded_cells / grid.sum())
    assert res.invaded_km2 == pytest.approx(res.invaded_cells * 100.0 / 1e6)


def test_zero_rate(rng):
    h = HabitatRaster((0.0, 0.0), 10.0, np.ones((30, 30)))
    res = project(rng, [(100.0, 100.0, 20.0)] * 10, h, lam=0.0, nu=5.0)
    assert res.invaded_cells == 0 and res.fraction == 0.0


@given(st.integers(0, 2**32 - 1), st.floats(1e-5, 1e-3), st.floats(0.5, 10.0), st.floats(0.0, 30.0),
       st.floats(1.0, 3.0))
def test_monotone_under_common_random_numbers(seed, lam, nu, horizon, factor):
    rng = np.random.default_rng(seed)
    net = synthetic_network(rng, n=5, extent=400.0)
    h = HabitatRaster((0.0, 0.0), 10.0, rng.random((40, 40)) < 0.6)
    pts = seed_points(net)
    base = project(np.random.default_rng(seed), pts, h, lam, nu, horizon)
    for kw in (dict(lam=lam * factor, nu=nu, horizon_years=horizon),
               dict(lam=lam, nu=nu * factor, horizon_years=horizon),
               dict(lam=lam, nu=nu, horizon_years=horizon + 10 * factor)):
        more = project(np.random.default_rng(seed), pts, h, **kw)
        assert not np.any(base.invaded & ~more.invaded)
