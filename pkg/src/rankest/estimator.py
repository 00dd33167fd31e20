"""Scikit-learn style front end for the rank estimators.

:class:`RankEstimator` wraps the exact coordinate-ascent fitter in the
standard estimator protocol: constructor parameters are stored verbatim,
``fit`` returns ``self`` and exposes the results as trailing-underscore
attributes, and ``get_params``/``set_params`` come from ``BaseEstimator``
so the class composes with pipelines and parameter searches.

The model identifies coefficients only up to a monotone transform of the
linear index, so ``predict`` returns the fitted index ``X @ coef_`` (a
ranking score), not a response on the scale of ``y``;  ``score`` is the
rank objective itself evaluated on the given data, higher is better.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .covariance import estimate_covariance, projection_ci
from .data import EstimatorSpec, Sample, SearchDomain
from .fitting import FitOptions, fit
from .objectives import objective


class RankEstimator(BaseEstimator):
    """Semiparametric single-index estimator driven by a rank objective.

    Parameters
    ----------
    kind : {'mrc', 'cs', 'kt', 'as'}, default='mrc'
        Which pairwise rank objective to maximise.
    trim_lo, trim_hi : float, optional
        Winsorisation bounds for ``kind='cs'``.
    kernel : str or callable, default='gaussian'
        Smoothing kernel for ``kind='as'``.
    bandwidth_c, bandwidth_delta : float, optional
        Bandwidth ``b = c * n ** (-delta)`` for ``kind='as'``.
    init : array-like of shape (p,), optional
        Starting coefficients; zeros by default.
    domain : SearchDomain or float, optional
        Search box; a float means a box of that half-width around ``init``.
    max_sweeps : int, default=50
        Cap on coordinate-ascent sweeps.

    Attributes
    ----------
    theta_ : ndarray of shape (p,)
        Fitted free coefficients.
    coef_ : ndarray of shape (p + 1,)
        Full index coefficients ``(1, theta_)``.
    objective_value_ : float
        Value of the rank objective at ``theta_``.
    converged_ : bool
    n_sweeps_ : int
    trace_ : ndarray
        Objective value at the end of each sweep.

    Examples
    --------
    >>> est = RankEstimator(kind="mrc").fit(X, y)
    >>> est.theta_
    """

    def __init__(
        self,
        kind: str = "mrc",
        trim_lo: Optional[float] = None,
        trim_hi: Optional[float] = None,
        kernel="gaussian",
        bandwidth_c: Optional[float] = None,
        bandwidth_delta: Optional[float] = None,
        init=None,
        domain=None,
        max_sweeps: int = 50,
    ):
        self.kind = kind
        self.trim_lo = trim_lo
        self.trim_hi = trim_hi
        self.kernel = kernel
        self.bandwidth_c = bandwidth_c
        self.bandwidth_delta = bandwidth_delta
        self.init = init
        self.domain = domain
        self.max_sweeps = max_sweeps

    def _spec(self) -> EstimatorSpec:
        return EstimatorSpec(
            kind=self.kind,
            trim_lo=self.trim_lo,
            trim_hi=self.trim_hi,
            kernel=self.kernel,
            bandwidth_c=self.bandwidth_c,
            bandwidth_delta=self.bandwidth_delta,
        )

    def _sample(self, X, y, r=None, v=None, w=None) -> Sample:
        return Sample(y=np.asarray(y, dtype=np.float64), x=np.asarray(X, dtype=np.float64),
                      r=r, v=v, w=w)

    def _options(self, p: int) -> FitOptions:
        domain = self.domain
        if isinstance(domain, (int, float)):
            init = np.zeros(p) if self.init is None else np.asarray(self.init, dtype=np.float64)
            domain = SearchDomain.around(init, float(domain))
        return FitOptions(init=self.init, domain=domain, max_sweeps=self.max_sweeps)

    def fit(self, X, y, r=None, v=None, w=None):
        """Fit the index coefficients; column 0 of X carries the unit coefficient."""
        sample = self._sample(X, y, r=r, v=v, w=w)
        result = fit(sample, self._spec(), self._options(sample.p))
        self.n_features_in_ = sample.p + 1
        self.sample_ = sample
        self.theta_ = result.theta
        self.coef_ = np.concatenate(([1.0], result.theta))
        self.objective_value_ = result.objective.value
        self.objective_ = result.objective
        self.converged_ = result.converged
        self.n_sweeps_ = result.sweeps
        self.trace_ = result.trace
        return self

    def decision_function(self, X) -> np.ndarray:
        """Fitted linear index for new rows of X."""
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=np.float64)
        return X @ self.coef_

    def predict(self, X) -> np.ndarray:
        """Alias of :meth:`decision_function`; the index is identified only
        up to a monotone transform, so this is a ranking score."""
        return self.decision_function(X)

    def score(self, X, y, r=None, v=None, w=None) -> float:
        """Rank objective of the fitted coefficients on the given data."""
        check_is_fitted(self, "theta_")
        sample = self._sample(X, y, r=r, v=v, w=w)
        return objective(sample, self._spec(), self.theta_).value

    def covariance(self, epsilon: Optional[float] = None):
        """Numerical-derivative sandwich covariance at the fitted point.

        Stores and returns the :class:`~rankest.covariance.CovarianceEstimate`;
        ``epsilon`` defaults to the dimension-aware step.
        """
        check_is_fitted(self, "theta_")
        est = estimate_covariance(self.sample_, self._spec(), self.theta_, epsilon)
        self.covariance_ = est
        return est

    def confidence_interval(self, gamma, level: float = 0.95):
        """Normal CI for ``gamma' theta`` using the stored covariance."""
        check_is_fitted(self, "theta_")
        if not hasattr(self, "covariance_"):
            self.covariance()
        return projection_ci(self.theta_, self.covariance_, gamma, self.sample_.n, level)
