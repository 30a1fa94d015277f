import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from peakshave.estimators import (
    AdaptivePcrScheduler,
    BaselineScheduler,
    OfflineScheduler,
    PcrScheduler,
    check_demands,
)

X = np.array([[150.0, 220.0, 290.0, 180.0], [120.0, 260.0, 200.0, 240.0], [100.0, 300.0, 300.0, 110.0]])
PARAMS = dict(capacity=80.0, delta_max=100.0, d_lb=100.0, d_ub=300.0)


def test_offline_doc_example():
    X1 = np.array([[10.0, 6.0, 8.0]])
    np.testing.assert_allclose(OfflineScheduler(capacity=5.0, delta_max=10.0).fit(X1).predict(X1), [[3.5, 0, 1.5]])


@pytest.mark.parametrize("cls", [OfflineScheduler, PcrScheduler, AdaptivePcrScheduler, BaselineScheduler])
def test_clone_and_params(cls):
    est = cls(**PARAMS)
    params = est.get_params()
    assert params["capacity"] == 80.0
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(capacity=50.0)
    assert est.capacity == 50.0


@pytest.mark.parametrize("est", [
    OfflineScheduler(**PARAMS),
    PcrScheduler(**PARAMS),
    AdaptivePcrScheduler(method="fractional", **PARAMS),
    BaselineScheduler(kind="THR_avg", **PARAMS),
    BaselineScheduler(kind="Eql_Per", **PARAMS),
    BaselineScheduler(kind="RHC_half", window=2, **PARAMS),
])
def test_fit_predict_transform(est):
    delta = est.fit(X).predict(X)
    assert delta.shape == X.shape
    assert np.all(delta >= -1e-12) and np.all(delta.sum(axis=1) <= 80.0 + 1e-6)
    np.testing.assert_allclose(est.transform(X), X - delta)
    assert est.score(X) >= 0


def test_offline_scores_best():
    best = OfflineScheduler(**PARAMS).fit(X).score(X)
    for est in (PcrScheduler(**PARAMS), BaselineScheduler(kind="THR_half", **PARAMS)):
        assert est.fit(X).score(X) <= best + 1e-9


def test_pcr_learns_ratio():
    est = PcrScheduler(**PARAMS).fit(X)
    assert est.ratio_ == est.cr_.pi_star >= 1
    assert PcrScheduler(ratio=3.0, **PARAMS).fit(X).ratio_ == 3.0


def test_adaptive_records_ratios():
    est = AdaptivePcrScheduler(method="fractional", **PARAMS).fit(X)
    est.predict(X)
    assert est.ratios_.shape == X.shape
    assert np.all(est.ratios_ <= est.pi_star_ + 1e-6)


def test_bounds_default_to_data():
    est = OfflineScheduler(capacity=10.0, delta_max=10.0).fit(X)
    assert est.instance_.d_lb == 100.0 and est.instance_.d_ub == 300.0


def test_validation_errors():
    with pytest.raises(NotFittedError):
        OfflineScheduler(**PARAMS).predict(X)
    est = OfflineScheduler(**PARAMS).fit(X)
    with pytest.raises(ValueError):
        est.predict(X[:, :3])
    with pytest.raises(ValueError):
        est.predict(X + 500)
    with pytest.raises(ValueError):
        check_demands(-X)
    with pytest.raises(ValueError):
        check_demands([[np.nan, 1.0]])
