"""Core data containers and input validation.

The estimation problem is a semiparametric single-index model: the linear
index uses a coefficient vector ``beta = (1, theta)`` whose leading entry is
pinned to one for scale identification, so only ``theta`` (length ``p``) is
free.  A dataset is held in an immutable :class:`Sample`; the choice of rank
objective and its tuning constants live in :class:`EstimatorSpec`; the box
over which coefficients are searched is a :class:`SearchDomain`.

Validation is centralised in :func:`validate_sample`, which checks the joint
invariants of a sample/spec pair and raises one of the exceptions from
:mod:`rankest.errors` on the first violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    MissingColumn,
    NonFiniteValue,
)

#: Names of the supported rank objectives.
KINDS = ("mrc", "cs", "kt", "as")


def _readonly_f64(a, name: str, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got ndim={arr.ndim}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Sample:
    """Immutable observation container.

    Parameters
    ----------
    y : array of shape (n,)
        Outcome.  Only its ordering matters for the rank objectives.
    x : array of shape (n, p + 1)
        Covariates.  Column 0 is the covariate whose coefficient is
        normalised to one; columns 1..p carry the free coefficients.
    r, v : arrays of shape (n,), optional
        Censoring indicator (values in {0, 1}) and censored response used
        by the censored-regression objective.  Both or neither must be given.
    w : array of shape (n,), optional
        Scalar conditioning variable used by the smoothed objective.
    """

    y: np.ndarray
    x: np.ndarray
    r: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "y", _readonly_f64(self.y, "y", 1))
        object.__setattr__(self, "x", _readonly_f64(self.x, "x", 2))
        for name in ("r", "v", "w"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _readonly_f64(val, name, 1))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1] - 1


@dataclass(frozen=True)
class Beta:
    """Coefficient vector with the identification normalisation applied.

    ``theta`` holds the p free coefficients; ``full`` is ``(1, theta)``.
    """

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _readonly_f64(self.theta, "theta", 1))

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    @property
    def full(self) -> np.ndarray:
        out = np.concatenate(([1.0], self.theta))
        out.flags.writeable = False
        return out


def as_theta(theta, p: Optional[int] = None) -> np.ndarray:
    """Coerce ``theta`` to a finite 1-d float64 array (optionally of length p)."""
    arr = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionMismatch(f"theta must be 1-dimensional, got ndim={arr.ndim}")
    if p is not None and arr.shape[0] != p:
        raise DimensionMismatch(f"theta has length {arr.shape[0]}, expected {p}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("theta contains non-finite values")
    return arr


def full_coefficients(theta) -> np.ndarray:
    """Return ``(1, theta)``, the full coefficient vector on the index."""
    return np.concatenate(([1.0], as_theta(theta)))


@dataclass(frozen=True)
class SearchDomain:
    """Per-coordinate box ``[lo_k, hi_k]`` constraining the search for theta."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _readonly_f64(self.lo, "lo", 1))
        object.__setattr__(self, "hi", _readonly_f64(self.hi, "hi", 1))
        if self.lo.shape != self.hi.shape:
            raise DimensionMismatch("domain lo and hi must have equal length")
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise NonFiniteValue("domain bounds contain non-finite values")
        if not np.all(self.lo < self.hi):
            raise InvalidArgument("domain requires lo < hi in every coordinate")

    @property
    def p(self) -> int:
        return self.lo.shape[0]

    def contains(self, theta) -> bool:
        t = as_theta(theta, self.p)
        return bool(np.all(t >= self.lo) and np.all(t <= self.hi))

    @classmethod
    def around(cls, center, half_width: float = 10.0) -> "SearchDomain":
        """Box of half-width ``half_width`` centred at ``center``."""
        c = as_theta(center)
        if half_width <= 0:
            raise InvalidArgument("half_width must be positive")
        return cls(lo=c - half_width, hi=c + half_width)


@dataclass(frozen=True)
class EstimatorSpec:
    """Which rank objective to use, with its tuning constants.

    ``kind`` is one of ``"mrc"`` (maximum rank correlation), ``"cs"``
    (trimmed rank correlation for monotone regression), ``"kt"`` (censored
    pairwise comparison) and ``"as"`` (rank correlation smoothed over a
    conditioning variable).

    ``trim_lo``/``trim_hi`` are the winsorisation bounds of the "cs"
    objective.  ``bandwidth_c``/``bandwidth_delta`` give the "as"
    bandwidth ``b = c * n ** (-delta)``; ``kernel`` is either the string
    ``"gaussian"`` or a vectorised callable ``K(u)``.
    """

    kind: str
    trim_lo: Optional[float] = None
    trim_hi: Optional[float] = None
    kernel: Union[str, Callable] = "gaussian"
    bandwidth_c: Optional[float] = None
    bandwidth_delta: Optional[float] = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown estimator kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "cs":
            if self.trim_lo is None or self.trim_hi is None:
                raise InvalidArgument("'cs' requires trim_lo and trim_hi")
            if not (np.isfinite(self.trim_lo) and np.isfinite(self.trim_hi)):
                raise NonFiniteValue("trim bounds must be finite")
            if not self.trim_lo < self.trim_hi:
                raise InvalidArgument("'cs' requires trim_lo < trim_hi")
        if self.kind == "as":
            if self.bandwidth_c is None or self.bandwidth_delta is None:
                raise InvalidArgument("'as' requires bandwidth_c and bandwidth_delta")
            if not (np.isfinite(self.bandwidth_c) and self.bandwidth_c > 0):
                raise InvalidArgument("bandwidth_c must be positive")
            if not (0.0 < self.bandwidth_delta < 1.0):
                raise InvalidArgument("bandwidth_delta must lie in (0, 1)")
            if not (self.kernel == "gaussian" or callable(self.kernel)):
                raise InvalidArgument("kernel must be 'gaussian' or a callable")

    def bandwidth(self, n: int) -> float:
        """Smoothing bandwidth for a sample of size n ('as' only)."""
        if self.kind != "as":
            raise InvalidArgument("bandwidth is defined only for kind='as'")
        return float(self.bandwidth_c) * float(n) ** (-float(self.bandwidth_delta))


def validate_sample(sample: Sample, spec: EstimatorSpec) -> None:
    """Check all joint invariants of a sample/spec pair.

    Raises ``DimensionMismatch``, ``MissingColumn``, ``NonFiniteValue`` or
    ``InvalidArgument`` on the first violation; returns None when the pair
    is usable by every operation of the package.
    """
    spec.validate()

    n = sample.n
    if n < 2:
        raise DimensionMismatch(f"need at least 2 observations, got {n}")
    if sample.x.shape[0] != n:
        raise DimensionMismatch(
            f"x has {sample.x.shape[0]} rows but y has {n} entries"
        )
    if sample.x.shape[1] < 2:
        raise DimensionMismatch(
            "x needs at least 2 columns (the normalised covariate plus one free coefficient)"
        )
    if not np.all(np.isfinite(sample.y)):
        raise NonFiniteValue("y contains non-finite values")
    if not np.all(np.isfinite(sample.x)):
        raise NonFiniteValue("x contains non-finite values")

    if (sample.r is None) != (sample.v is None):
        absent = "v" if sample.v is None else "r"
        raise MissingColumn(f"columns r and v must be supplied together; {absent} is missing")

    for name in ("r", "v", "w"):
        col = getattr(sample, name)
        if col is None:
            continue
        if col.shape[0] != n:
            raise DimensionMismatch(f"{name} has length {col.shape[0]}, expected {n}")
        if not np.all(np.isfinite(col)):
            raise NonFiniteValue(f"{name} contains non-finite values")

    if sample.r is not None:
        if not np.all((sample.r == 0.0) | (sample.r == 1.0)):
            raise InvalidArgument("r entries must be 0 or 1")

    if spec.kind == "kt":
        if sample.r is None or sample.v is None:
            raise MissingColumn("'kt' requires columns r and v")
    if spec.kind == "as":
        if sample.w is None:
            raise MissingColumn("'as' requires column w")
