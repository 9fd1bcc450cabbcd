import math

import numpy as np
import pytest
from scipy import stats

from tdabc.geometry import Introduction
from tdabc.model import Dataset, ModelParams, RoadRecord, RoadState, TemporalData, log_poisson_pmf, log_prior


def test_params_validation():
    ModelParams((1e-5,), 10.0, 4.0).validate()
    for bad in [ModelParams((0.0,), 10.0, 4.0), ModelParams((1e-5,), -1.0, 4.0),
                ModelParams((1e-5,), 10.0, 0.0), ModelParams((math.nan,), 10.0, 1.0)]:
        with pytest.raises(ValueError):
            bad.validate()
    with pytest.raises(ValueError):
        ModelParams((), 1.0, 1.0)


def test_road_record_validation():
    RoadRecord(1, 11, 26.0, 0b110010).validate()
    with pytest.raises(ValueError):
        RoadRecord(0, 1, 26.0, 0).validate()
    with pytest.raises(ValueError):
        RoadRecord(1, 1, 0.5, 0).validate()
    with pytest.raises(ValueError):
        RoadRecord(1, 1, 10.0, 64).validate()


def test_temporal_data():
    z = TemporalData([12.0, 14.0])
    assert z.n == 2
    with pytest.raises(ValueError):
        z.z[0] = 1.0
    with pytest.raises(ValueError):
        TemporalData([1.0])
    with pytest.raises(ValueError):
        TemporalData([1.0, np.inf])
    assert z == TemporalData(np.array([12.0, 14.0]))


def test_dataset_rejects_duplicates():
    z = TemporalData([1.0, 2.0])
    r = RoadRecord(1, 1, 5.0, 0)
    with pytest.raises(ValueError):
        Dataset((r, r), z)
    assert Dataset((r, RoadRecord(3, 1, 5.0, 0)), z).groups == 3


def test_log_prior():
    p = ModelParams((0.5, 0.25), 12.0, 2.0)
    expected = (stats.expon.logpdf(0.5) + stats.expon.logpdf(0.25) + stats.norm(10, 10).logpdf(12.0)
                - math.log(2.0))
    assert log_prior(p) == pytest.approx(expected, rel=1e-12)
    assert log_prior(ModelParams((-1.0,), 1.0, 1.0)) == -math.inf


def test_log_poisson():
    assert log_poisson_pmf(3, 2.5) == pytest.approx(stats.poisson(2.5).logpmf(3), rel=1e-12)
    with pytest.raises(ValueError):
        log_poisson_pmf(1, 0.0)


def test_road_state_check():
    st = RoadState()
    st.check(1.0, 2.0)
    st.introductions.append(Introduction(10.1, 2.0))
    st.footprints.append(0b010000)
    st.simulated = 0b010000
    st.check(1.0, 2.0)
    st.simulated = 0
    with pytest.raises(AssertionError):
        st.check(1.0, 2.0)
