"""Sandwich covariance for the rank estimators via numerical differentiation.

The limit distribution of the fitted coefficients has covariance
``V^{-1} Delta V^{-1}`` where ``Delta`` is the second moment of the gradient
of the kernel projection ``tau(z; theta)`` and ``2 V`` is the expectation of
its Hessian.  Neither derivative exists pathwise (the objective is a step
function), but their smoothed population counterparts are recovered by
forward differencing ``tau`` at a step ``epsilon`` that shrinks slowly with
the sample size:

    p_i(z)  = [tau(z; th + e u_i) - tau(z; th)] / e
    Delta   = mean_z  p(z) p(z)'
    p_ij(z) = [tau(z; th + e(u_i+u_j)) - tau(z; th + e u_i)
                                       - tau(z; th + e u_j) + tau(z; th)] / e^2
    V       = (1/2) mean_z p_ij(z)

Only forward differences are used, and the ``1 + p + p (p + 1) / 2``
perturbed parameter points are each evaluated exactly once, so ``V`` comes
out symmetric by construction.  ``Delta`` is a Gram matrix and therefore
positive semi-definite up to rounding.

The centring of ``tau`` at the fitted point is immaterial here: only
differences of ``tau`` enter, so any constant shift cancels exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .data import EstimatorSpec, Sample, as_theta, validate_sample
from .errors import (
    InvalidArgument,
    InvalidStep,
    NonPositiveVariance,
    SingularHessian,
)
from .objectives import tau_values

#: Relative singular-value floor below which V is reported singular.
SINGULAR_RTOL = 1e-10


def default_step(n: int, p: int, c: float = 1.0) -> float:
    """Dimension-aware finite-difference step ``c * (p / n) ** (1 / 6)``."""
    if n <= 0 or p <= 0:
        raise InvalidArgument("n and p must be positive")
    if not (np.isfinite(c) and c > 0):
        raise InvalidArgument("step multiplier c must be positive")
    return float(c * (p / n) ** (1.0 / 6.0))


def step_for_multiplier(n: int, multiplier: float) -> float:
    """Size-only step grid ``multiplier * n ** (-1 / 6)`` used in tuning scans."""
    if n <= 0:
        raise InvalidArgument("n must be positive")
    if not (np.isfinite(multiplier) and multiplier > 0):
        raise InvalidArgument("multiplier must be positive")
    return float(multiplier * n ** (-1.0 / 6.0))


@dataclass(frozen=True)
class CovarianceEstimate:
    """Output of :func:`estimate_covariance`.

    ``sandwich`` estimates the asymptotic covariance of
    ``sqrt(n) (theta_hat - theta)``; divide by ``n`` for standard errors.
    ``v_condition`` is the spectral condition number of ``v_hat``.
    """

    delta_hat: np.ndarray
    v_hat: np.ndarray
    sandwich: np.ndarray
    epsilon: float
    v_condition: float


def finite_difference_matrices(
    tau_at: Callable[[np.ndarray], np.ndarray], theta_hat: np.ndarray, epsilon: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Forward-difference ``Delta`` and ``V`` for an arbitrary tau provider.

    ``tau_at(theta)`` must return the vector of tau values over the sample.
    Split out from the estimator proper so the differencing plumbing can be
    exercised on synthetic smooth functions.
    """
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    p = theta_hat.shape[0]
    base = np.asarray(tau_at(theta_hat), dtype=np.float64)
    n = base.shape[0]

    singles = []
    for i in range(p):
        point = theta_hat.copy()
        point[i] += epsilon
        singles.append(np.asarray(tau_at(point), dtype=np.float64))

    grad = np.empty((n, p))
    for i in range(p):
        grad[:, i] = (singles[i] - base) / epsilon
    delta = grad.T @ grad / n

    v = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            point = theta_hat.copy()
            point[i] += epsilon
            point[j] += epsilon
            pair = np.asarray(tau_at(point), dtype=np.float64)
            second = (pair - singles[i] - singles[j] + base) / (epsilon * epsilon)
            v_ij = 0.5 * float(np.mean(second))
            v[i, j] = v_ij
            v[j, i] = v_ij
    return delta, v


def delta_v_matrices(
    sample: Sample, spec: EstimatorSpec, theta_hat, epsilon: float
) -> Tuple[np.ndarray, np.ndarray]:
    """``Delta`` and ``V`` for a fitted rank estimator (no inversion)."""
    validate_sample(sample, spec)
    theta_hat = as_theta(theta_hat, sample.p)
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise InvalidStep(f"finite-difference step must be positive, got {epsilon}")
    return finite_difference_matrices(
        lambda th: tau_values(sample, spec, th), theta_hat, float(epsilon)
    )


def estimate_covariance(
    sample: Sample,
    spec: EstimatorSpec,
    theta_hat,
    epsilon: Optional[float] = None,
) -> CovarianceEstimate:
    """Numerical-derivative sandwich covariance at the fitted point.

    ``epsilon`` defaults to :func:`default_step` with multiplier one.
    Raises :class:`SingularHessian` (with the computed matrices attached)
    when the smallest singular value of ``V`` is below ``1e-10`` times the
    largest.
    """
    validate_sample(sample, spec)
    theta_hat = as_theta(theta_hat, sample.p)
    if epsilon is None:
        epsilon = default_step(sample.n, sample.p)
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise InvalidStep(f"finite-difference step must be positive, got {epsilon}")

    delta, v = delta_v_matrices(sample, spec, theta_hat, epsilon)
    eigvals, eigvecs = np.linalg.eigh(v)
    magnitudes = np.abs(eigvals)
    largest = magnitudes.max()
    smallest = magnitudes.min()
    if largest == 0.0 or smallest < SINGULAR_RTOL * largest:
        raise SingularHessian(
            f"V is numerically singular (|eig| range [{smallest:.3e}, {largest:.3e}])",
            delta_hat=delta,
            v_hat=v,
        )
    v_inv = (eigvecs / eigvals) @ eigvecs.T
    sandwich = v_inv @ delta @ v_inv
    return CovarianceEstimate(
        delta_hat=delta,
        v_hat=v,
        sandwich=sandwich,
        epsilon=float(epsilon),
        v_condition=float(largest / smallest),
    )


def projection_ci(theta_hat, cov, gamma, n: int, level: float = 0.95) -> Tuple[float, float]:
    """Two-sided normal confidence interval for ``gamma' theta``.

    ``cov`` may be a :class:`CovarianceEstimate` or a raw sandwich matrix
    scaled for ``sqrt(n) (theta_hat - theta)``; the interval half-width is
    ``z * sqrt(gamma' S gamma / n)``.
    """
    from scipy.stats import norm

    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    sandwich = getattr(cov, "sandwich", cov)
    sandwich = np.asarray(sandwich, dtype=np.float64)
    p = theta_hat.shape[0]
    if gamma.shape != (p,) or sandwich.shape != (p, p):
        raise InvalidArgument("gamma/covariance dimensions do not match theta_hat")
    if not 0.0 < level < 1.0:
        raise InvalidArgument("confidence level must lie in (0, 1)")
    if n <= 0:
        raise InvalidArgument("n must be positive")

    variance = float(gamma @ sandwich @ gamma) / n
    if variance <= 0.0:
        raise NonPositiveVariance(
            f"projected variance {variance:.3e} is not positive"
        )
    z = float(norm.ppf(0.5 * (1.0 + level)))
    center = float(gamma @ theta_hat)
    half = float(z * np.sqrt(variance))
    return center - half, center + half
