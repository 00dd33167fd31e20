"""Exception hierarchy shared across the package.

Every error raised by rankest derives from :class:`RankestError`, so callers
can catch one base class at an API boundary.  The concrete subclasses map
one-to-one onto failure modes that are distinguishable by the caller: bad
array shapes, absent optional columns, non-finite data, invalid tuning
arguments, and the two numerical failures of the covariance step.
"""

from __future__ import annotations


class RankestError(Exception):
    """Base class for all rankest errors."""


class DimensionMismatch(RankestError):
    """Array lengths or shapes are inconsistent with each other."""


class MissingColumn(RankestError):
    """A data column required by the chosen estimator is absent."""


class NonFiniteValue(RankestError):
    """An input array contains NaN or infinity."""


class InvalidArgument(RankestError):
    """A scalar argument or configuration value is outside its domain."""


class InvalidStep(RankestError):
    """The finite-difference step for the covariance estimator is not positive."""


class SingularHessian(RankestError):
    """The numerically differentiated Hessian-type matrix is singular.

    Raised when the smallest singular value of ``V`` falls below
    ``1e-10`` times the largest, in which case the sandwich matrix is
    not computable.  The offending matrices are attached so diagnostics
    (and tests) can inspect them.
    """

    def __init__(self, message: str, delta_hat=None, v_hat=None):
        super().__init__(message)
        self.delta_hat = delta_hat
        self.v_hat = v_hat


class NonPositiveVariance(RankestError):
    """A projected variance needed for a confidence interval is not positive."""


class DegenerateSample(RankestError):
    """A sample is constant where variation is required (e.g. KDE input)."""
