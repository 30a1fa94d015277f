"""scikit-learn style wrappers around the scheduling policies.

Each estimator treats a demand matrix ``X`` of shape ``(n_episodes, T)`` as a
batch of independent on-peak periods. ``fit`` fixes the problem instance
(bounds default to the extremes seen in ``X``) and learns whatever the policy
needs from history; ``predict`` returns the discharge matrix and
``transform`` the net demand left after discharging.

>>> import numpy as np
>>> X = np.array([[10.0, 6.0, 8.0]])
>>> OfflineScheduler(capacity=5.0, delta_max=10.0).fit(X).predict(X)
array([[3.5, 0. , 1.5]])
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import ProblemInstance, peak_reduction, solve_offline, validate_instance
from .crcomp import optimal_cr
from .online import DEFAULT_EPSILON, LP_METHOD, BaselinePolicy, run_adaptive, run_baseline, run_pcr


def check_demands(X, instance: ProblemInstance | None = None, tol=1e-9) -> np.ndarray:
    """Validate a demand matrix, optionally against a fitted instance."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if np.any(X < 0):
        raise ValueError("demands must be non-negative")
    if instance is not None:
        if X.shape[1] != instance.T:
            raise ValueError(f"X has {X.shape[1]} slots per row, estimator was fitted with T={instance.T}")
        if np.any(X < instance.d_lb - tol) or np.any(X > instance.d_ub + tol):
            raise ValueError(f"demands outside [{instance.d_lb}, {instance.d_ub}]")
    return X


class _StorageScheduler(TransformerMixin, BaseEstimator):
    def __init__(self, capacity=1.0, delta_max=1.0, d_lb=None, d_ub=None):
        self.capacity = capacity
        self.delta_max = delta_max
        self.d_lb = d_lb
        self.d_ub = d_ub

    def _fit_instance(self, X):
        X = check_demands(X)
        d_lb = float(X.min()) if self.d_lb is None else float(self.d_lb)
        d_ub = float(X.max()) if self.d_ub is None else float(self.d_ub)
        self.instance_ = validate_instance(
            ProblemInstance(X.shape[1], float(self.capacity), float(self.delta_max), d_lb, d_ub)
        )
        self.n_features_in_ = X.shape[1]
        return X

    def fit(self, X, y=None):
        self._fit_instance(X)
        return self

    def _schedule(self, d):
        raise NotImplementedError

    def predict(self, X):
        """Discharge matrix, one row per episode."""
        check_is_fitted(self, "instance_")
        X = check_demands(X, self.instance_)
        return np.vstack([self._schedule(row) for row in X]) if len(X) else np.zeros((0, X.shape[1]))

    def transform(self, X):
        X = check_demands(X)
        return X - self.predict(X)

    def score(self, X, y=None):
        """Mean peak reduction (kWh) over the rows of ``X``."""
        X = check_demands(X)
        delta = self.predict(X)
        return float(np.mean([peak_reduction(d, s) for d, s in zip(X, delta)]))


class OfflineScheduler(_StorageScheduler):
    """Clairvoyant optimum, for benchmarking."""

    def _schedule(self, d):
        return solve_offline(self.instance_, d).schedule.values


class PcrScheduler(_StorageScheduler):
    """Fixed-ratio pursuit policy.

    ``ratio=None`` fits the best competitive ratio of the instance.
    """

    def __init__(self, capacity=1.0, delta_max=1.0, d_lb=None, d_ub=None, ratio=None,
                 lp_method=LP_METHOD):
        super().__init__(capacity, delta_max, d_lb, d_ub)
        self.ratio = ratio
        self.lp_method = lp_method

    def fit(self, X, y=None):
        self._fit_instance(X)
        if self.ratio is None:
            self.cr_ = optimal_cr(self.instance_, method=self.lp_method)
            self.ratio_ = self.cr_.pi_star
        else:
            self.ratio_ = float(self.ratio)
        return self

    def _schedule(self, d):
        return run_pcr(self.instance_, self.ratio_, d).values


class AdaptivePcrScheduler(_StorageScheduler):
    """Pursuit policy that re-derives its ratio every slot.

    ``ratios_`` holds the per-slot ratios of the most recent ``predict`` call.
    """

    def __init__(self, capacity=1.0, delta_max=1.0, d_lb=None, d_ub=None, pi_star=None,
                 epsilon=DEFAULT_EPSILON, method="bisection", lp_method=LP_METHOD):
        super().__init__(capacity, delta_max, d_lb, d_ub)
        self.pi_star = pi_star
        self.epsilon = epsilon
        self.method = method
        self.lp_method = lp_method

    def fit(self, X, y=None):
        self._fit_instance(X)
        if self.pi_star is None:
            self.pi_star_ = optimal_cr(self.instance_, method=self.lp_method).pi_star
        else:
            self.pi_star_ = float(self.pi_star)
        return self

    def predict(self, X):
        self._ratios = []
        out = super().predict(X)
        self.ratios_ = np.array(self._ratios).reshape(len(out), -1)
        return out

    def _schedule(self, d):
        run = run_adaptive(self.instance_, d, self.epsilon, pi_star=self.pi_star_,
                           method=self.method, lp_method=self.lp_method)
        self._ratios.append(run.pi_series)
        return run.schedule.values


class BaselineScheduler(_StorageScheduler):
    """Threshold, equal-split and receding-horizon comparison policies.

    ``fit`` learns the ``THR_avg`` threshold (mean offline peak after
    discharge) and the ``Eql_Per`` ratio (capacity over mean episode energy)
    from ``X`` unless they are given explicitly.
    """

    def __init__(self, kind="THR_half", capacity=1.0, delta_max=1.0, d_lb=None, d_ub=None,
                 window=5, threshold=None, ratio=None):
        super().__init__(capacity, delta_max, d_lb, d_ub)
        self.kind = kind
        self.window = window
        self.threshold = threshold
        self.ratio = ratio

    def fit(self, X, y=None):
        X = self._fit_instance(X)
        threshold, ratio = self.threshold, self.ratio
        if self.kind == "THR_avg" and threshold is None:
            threshold = float(np.mean([solve_offline(self.instance_, d).peak_after for d in X]))
        if self.kind == "Eql_Per" and ratio is None:
            ratio = min(1.0, self.instance_.c / float(np.mean(X.sum(axis=1))))
        self.policy_ = BaselinePolicy(self.kind, threshold=threshold, ratio=ratio, window=self.window)
        return self

    def _schedule(self, d):
        return run_baseline(self.policy_, self.instance_, d).values
