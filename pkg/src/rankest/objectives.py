"""Pairwise rank objectives and their building blocks.

Every supported objective is a second-order U-statistic

    S_n(theta) = (1 / (n (n - 1))) * sum over i != j of f(z_i, z_j; beta)

with ``beta = (1, theta)`` and a pair kernel ``f`` that depends on beta only
through order comparisons of the linear index ``u = x @ beta``:

- ``mrc``:  1(y_i > y_j) 1(u_i > u_j)
- ``cs``:   M(y_i) 1(u_i > u_j) with M winsorising y to [trim_lo, trim_hi]
- ``kt``:   r_i 1(v_i < v_j) 1(u_i < u_j)
- ``as``:   1(y_i > y_j) 1(u_i > u_j) K_b(w_i - w_j),  K_b(t) = K(t / b) / b

Each kernel can be rewritten as ``a_ij * 1(u_i > u_j)`` for pair weights
``a_ij`` that are fixed by the data (for ``kt`` this flips the orientation
of the pair, which leaves every symmetrised sum used here unchanged).  The
weights drive three things: the objective value itself, the O(n^2) evaluation
of the per-observation projection ``tau``, and the breakpoint sweeps of the
coordinate maximiser.

Indicator-valued objectives (``mrc``, ``kt``) are accumulated as exact
integer counts; the real-weighted ones use numpy's pairwise summation in a
fixed reduction order, so results do not depend on threading or chunking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .concordance import concordant_weight_sum, fast_concordance
from .data import EstimatorSpec, Sample, as_theta, full_coefficients, validate_sample
from .errors import InvalidArgument

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def gaussian_kernel(t):
    """Standard normal density, the default smoothing kernel."""
    t = np.asarray(t, dtype=np.float64)
    return np.exp(-0.5 * t * t) / _SQRT_2PI


def resolve_kernel(spec: EstimatorSpec):
    if callable(spec.kernel):
        return spec.kernel
    if spec.kernel == "gaussian":
        return gaussian_kernel
    raise InvalidArgument(f"unknown kernel {spec.kernel!r}")


def winsorise(y, lo: float, hi: float) -> np.ndarray:
    """The trimming transform of the 'cs' objective: clamp y to [lo, hi]."""
    return np.clip(np.asarray(y, dtype=np.float64), lo, hi)


@dataclass(frozen=True)
class ObjectiveValue:
    """Value of a rank objective together with its bookkeeping.

    ``value`` is the normalised U-statistic, ``num_pairs`` is ``n (n - 1)``
    and ``raw_count`` is the exact integer pair count for the
    indicator-valued objectives (None otherwise).
    """

    value: float
    num_pairs: int
    raw_count: Optional[int] = None


def pair_weights_for_pairs(
    sample: Sample, spec: EstimatorSpec, i_idx, j_idx
) -> Tuple[np.ndarray, np.ndarray]:
    """Weights (a_ij, a_ji) for explicit pair index arrays.

    Returns integer arrays for 'mrc'/'kt' and float arrays for 'cs'/'as'.
    ``a_ij`` multiplies 1(u_i > u_j) and ``a_ji`` multiplies 1(u_j > u_i).
    """
    y = sample.y
    if spec.kind == "mrc":
        a_ij = (y[i_idx] > y[j_idx]).astype(np.int64)
        a_ji = (y[j_idx] > y[i_idx]).astype(np.int64)
    elif spec.kind == "cs":
        m = winsorise(y, spec.trim_lo, spec.trim_hi)
        a_ij = m[i_idx].copy()
        a_ji = m[j_idx].copy()
    elif spec.kind == "kt":
        r = sample.r
        v = sample.v
        a_ij = (r[j_idx] * (v[j_idx] < v[i_idx])).astype(np.int64)
        a_ji = (r[i_idx] * (v[i_idx] < v[j_idx])).astype(np.int64)
    elif spec.kind == "as":
        kern = resolve_kernel(spec)
        b = spec.bandwidth(sample.n)
        w = sample.w
        kb_ij = np.asarray(kern((w[i_idx] - w[j_idx]) / b), dtype=np.float64) / b
        kb_ji = np.asarray(kern((w[j_idx] - w[i_idx]) / b), dtype=np.float64) / b
        a_ij = (y[i_idx] > y[j_idx]) * kb_ij
        a_ji = (y[j_idx] > y[i_idx]) * kb_ji
    else:
        raise InvalidArgument(f"unknown estimator kind {spec.kind!r}")
    return a_ij, a_ji


def pair_weight_matrix(sample: Sample, spec: EstimatorSpec) -> np.ndarray:
    """Dense matrix A with A[i, j] multiplying 1(u_i > u_j); diagonal is zero."""
    n = sample.n
    y = sample.y
    if spec.kind == "mrc":
        a = (y[:, None] > y[None, :]).astype(np.int64)
    elif spec.kind == "cs":
        m = winsorise(y, spec.trim_lo, spec.trim_hi)
        a = np.repeat(m[:, None], n, axis=1)
    elif spec.kind == "kt":
        a = (sample.r[None, :] * (sample.v[None, :] < sample.v[:, None])).astype(np.int64)
    elif spec.kind == "as":
        kern = resolve_kernel(spec)
        b = spec.bandwidth(n)
        kb = np.asarray(kern((sample.w[:, None] - sample.w[None, :]) / b), dtype=np.float64) / b
        a = (y[:, None] > y[None, :]) * kb
    else:
        raise InvalidArgument(f"unknown estimator kind {spec.kind!r}")
    np.fill_diagonal(a, 0)
    return a


def num_pairs(n: int) -> int:
    return n * (n - 1)


def objective(sample: Sample, spec: EstimatorSpec, theta) -> ObjectiveValue:
    """Evaluate the rank objective at ``theta``.

    Uses the O(n log n) counting path for 'mrc', 'kt' and 'cs'; 'as' needs
    the dense pairwise smoother and is O(n^2).
    """
    validate_sample(sample, spec)
    theta = as_theta(theta, sample.p)
    n = sample.n
    u = sample.x @ full_coefficients(theta)
    pairs = num_pairs(n)

    if spec.kind == "mrc":
        raw = fast_concordance(u, sample.y)
        return ObjectiveValue(value=raw / pairs, num_pairs=pairs, raw_count=raw)
    if spec.kind == "kt":
        raw = concordant_weight_sum(u, sample.v, sample.r.astype(np.int64))
        return ObjectiveValue(value=raw / pairs, num_pairs=pairs, raw_count=raw)
    if spec.kind == "cs":
        m = winsorise(sample.y, spec.trim_lo, spec.trim_hi)
        below = np.searchsorted(np.sort(u, kind="stable"), u, side="left")
        total = float(np.dot(m, below.astype(np.float64)))
        return ObjectiveValue(value=total / pairs, num_pairs=pairs, raw_count=None)
    # 'as'
    a = pair_weight_matrix(sample, spec)
    greater = u[:, None] > u[None, :]
    total = float(np.sum(a * greater))
    return ObjectiveValue(value=total / pairs, num_pairs=pairs, raw_count=None)


def kernel_matrix(sample: Sample, spec: EstimatorSpec, theta) -> np.ndarray:
    """Dense matrix F with F[i, j] = f(z_i, z_j; beta) in its stated orientation.

    Diagnostic helper (O(n^2) memory); the diagonal is identically zero
    because every kernel compares the index strictly.
    """
    theta = as_theta(theta, sample.p)
    u = sample.x @ full_coefficients(theta)
    y = sample.y
    if spec.kind == "mrc":
        f = (y[:, None] > y[None, :]) & (u[:, None] > u[None, :])
        return f.astype(np.float64)
    if spec.kind == "cs":
        m = winsorise(y, spec.trim_lo, spec.trim_hi)
        return m[:, None] * (u[:, None] > u[None, :])
    if spec.kind == "kt":
        r, v = sample.r, sample.v
        f = (v[:, None] < v[None, :]) & (u[:, None] < u[None, :])
        return r[:, None] * f
    if spec.kind == "as":
        kern = resolve_kernel(spec)
        b = spec.bandwidth(sample.n)
        kb = np.asarray(kern((sample.w[:, None] - sample.w[None, :]) / b), dtype=np.float64) / b
        f = (y[:, None] > y[None, :]) & (u[:, None] > u[None, :])
        return f * kb
    raise InvalidArgument(f"unknown estimator kind {spec.kind!r}")


def tau_values(sample: Sample, spec: EstimatorSpec, theta) -> np.ndarray:
    """Vector of tau(z_m; theta) for every observation m (uncentered).

    tau(z; theta) = (1/n) sum_j f(z, z_j) + (1/n) sum_i f(z_i, z)
    with both averages taken over the full sample (the self pair
    contributes zero because index comparisons are strict).
    """
    theta = as_theta(theta, sample.p)
    n = sample.n
    u = sample.x @ full_coefficients(theta)
    a = pair_weight_matrix(sample, spec)
    greater = u[:, None] > u[None, :]
    b = a * greater
    return (b.sum(axis=1) + b.sum(axis=0)) / n


def tau_n(
    sample: Sample,
    spec: EstimatorSpec,
    z_index: int,
    theta,
    theta_ref=None,
) -> float:
    """Projection of the pair kernel onto observation ``z_index``.

    With ``theta_ref`` given, the kernel is centred at the reference point,
    i.e. the value is tau(z; theta) - tau(z; theta_ref); it is exactly zero
    when ``theta == theta_ref``.
    """
    validate_sample(sample, spec)
    if not 0 <= z_index < sample.n:
        raise InvalidArgument(f"z_index {z_index} outside [0, {sample.n})")
    vals = tau_values(sample, spec, theta)
    if theta_ref is None:
        return float(vals[z_index])
    ref = tau_values(sample, spec, theta_ref)
    return float(vals[z_index] - ref[z_index])


def hoeffding_check(sample: Sample, spec: EstimatorSpec, theta, theta_ref=None) -> float:
    """Absolute residual of the empirical two-term projection decomposition.

    The U-statistic objective decomposes as

        S_n = S_bar + mean_i g(z_i) + U_n h

    where ``S_bar`` is the plug-in mean over all ordered pairs (including
    self pairs), ``g(z) = avg_j f(z, z_j) + avg_i f(z_i, z) - 2 S_bar`` and
    ``h(z_i, z_j) = f(z_i, z_j) - avg f(z_i, .) - avg f(., z_j) + S_bar``.
    The identity holds exactly for the empirical averages, so the returned
    residual is floating-point noise; it doubles as a consistency check of
    the fast counting path because the left-hand side is evaluated through
    :func:`objective`.

    With ``theta_ref`` the decomposition is applied to the centred kernel
    f(.; theta) - f(.; theta_ref); at ``theta == theta_ref`` every piece
    vanishes identically.
    """
    validate_sample(sample, spec)
    n = sample.n
    f = kernel_matrix(sample, spec, theta)
    lhs = objective(sample, spec, theta).value
    if theta_ref is not None:
        f = f - kernel_matrix(sample, spec, theta_ref)
        lhs = lhs - objective(sample, spec, theta_ref).value

    row_avg = f.mean(axis=1)
    col_avg = f.mean(axis=0)
    s_bar = f.mean()
    g = row_avg + col_avg - 2.0 * s_bar
    h = f - row_avg[:, None] - col_avg[None, :] + s_bar
    u_n_h = (h.sum() - np.trace(h)) / num_pairs(n)
    rhs = s_bar + g.mean() + u_n_h
    return float(abs(lhs - rhs))
