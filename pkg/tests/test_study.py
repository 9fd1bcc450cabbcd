import math

import numpy as np
import pytest

from tdabc import study
from tdabc.model import ModelParams
from tdabc.samplers import ChainConfig, InitializationError
from tdabc.study import (coverage_from_traces, coverage_study, default_road_table, interval_covers,
                         summarize_trace)


def test_hand_quantiles():
    (row,) = summarize_trace(np.arange(1, 101), (0.025, 0.975))
    assert row.lower == pytest.approx(3.475)
    assert row.upper == pytest.approx(97.525)
    assert row.median == pytest.approx(50.5)
    assert row.mean == pytest.approx(50.5)


def test_constant_trace():
    (row,) = summarize_trace({"nu": np.full(10, 4.2)})
    assert row.median == row.lower == row.upper == pytest.approx(4.2)


def test_bad_arguments():
    with pytest.raises(ValueError):
        summarize_trace(np.arange(5), (0.9, 0.1))
    with pytest.raises(ValueError):
        summarize_trace(np.arange(5), (-0.1, 0.5))
    with pytest.raises(ValueError):
        summarize_trace(np.array([]))


def test_truth_injection_self_test():
    truth = {"nu": 13.0}
    rows = coverage_from_traces([{"nu": np.full(5, 13.0)}], truth)
    assert rows[0].coverage == 1.0 and rows[0].n_effective == 1
    rows = coverage_from_traces([{"nu": np.full(5, 13.0)}, None, {"nu": np.full(5, 1.0)}], truth)
    assert rows[0].coverage == 0.5 and rows[0].n_failed == 1
    assert rows[0].std_error == pytest.approx(math.sqrt(0.25 / 2))
    assert interval_covers({"nu": np.linspace(0, 1, 101)}, {"nu": 0.99}) == {"nu": False}


def test_default_road_table(rng):
    roads = default_road_table(rng, 200, groups=2)
    ages = np.array([a for _, a in roads])
    assert len(roads) == 400
    assert ages.min() >= 6 and ages.max() <= 56 and np.all(ages == np.round(ages))
    assert {g for g, _ in roads} == {1, 2}


def test_study_is_deterministic():
    p = ModelParams((5e-5,), 10.0, 4.0)
    roads = [(1, 20.0), (1, 30.0), (1, 15.0)]
    cfg = ChainConfig(iterations=600, burn_in=100)
    a = coverage_study(5, p, roads, 3, cfg, n_z=8)
    b = coverage_study(5, p, roads, 3, cfg, n_z=8)
    assert a.rows == b.rows and a.covered == b.covered
    assert [r.parameter for r in a.rows] == ["lambda_1", "nu", "sigma2"]
    assert all(0.0 <= r.coverage <= 1.0 for r in a.rows)


def test_failed_replicates_are_counted(monkeypatch):
    calls = {"n": 0}
    real = study.run_chain

    def flaky(rng, dataset, config):
        calls["n"] += 1
        if calls["n"] == 2:
            raise InitializationError("stuck")
        return real(rng, dataset, config)

    monkeypatch.setattr(study, "run_chain", flaky)
    res = coverage_study(1, ModelParams((5e-5,), 10.0, 4.0), [(1, 20.0)], 3,
                         ChainConfig(iterations=300, burn_in=50), n_z=5)
    assert res.row("nu").n_failed == 1 and res.row("nu").n_effective == 2
    assert res.failures[0][0] == 1
    with pytest.raises(ValueError):
        coverage_study(1, ModelParams((5e-5,), 10.0, 4.0), [(1, 20.0)], 0, ChainConfig())
