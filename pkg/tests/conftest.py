import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line past pytest's capture, then assert."""
    def _report(label, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"
    return _report


def synthetic_network(rng, n=20, extent=2000.0):
    from tdabc.projection import RoadNetwork, RoadSegment
    segs = []
    for i in range(n):
        x0, y0 = rng.uniform(0, extent, 2)
        ang = rng.uniform(0, 2 * np.pi)
        length = rng.uniform(100, 600)
        mid = (x0 + 0.5 * length * np.cos(ang) + 20 * np.sin(ang), y0 + 0.5 * length * np.sin(ang))
        end = (x0 + length * np.cos(ang), y0 + length * np.sin(ang))
        segs.append(RoadSegment(f"r{i}", float(rng.integers(6, 57)), ((x0, y0), mid, end)))
    return RoadNetwork(tuple(segs))
