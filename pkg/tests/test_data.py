"""Sample containers, estimator configuration, and validation errors."""

import numpy as np
import pytest

from rankest.data import (
    Beta,
    EstimatorSpec,
    Sample,
    SearchDomain,
    as_theta,
    full_coefficients,
    validate_sample,
)
from rankest.errors import (
    DimensionMismatch,
    InvalidArgument,
    MissingColumn,
    NonFiniteValue,
)


def make_sample(n=8, p=2, seed=0, **extra):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p + 1))
    y = rng.integers(0, 2, size=n).astype(float)
    return Sample(y=y, x=x, **extra)


def test_sample_dimensions():
    s = make_sample(n=9, p=3)
    assert s.n == 9
    assert s.p == 3
    assert s.x.shape == (9, 4)


def test_sample_arrays_are_readonly_float64():
    s = make_sample()
    assert s.y.dtype == np.float64
    assert not s.x.flags.writeable
    with pytest.raises(ValueError):
        s.y[0] = 5.0


def test_validate_rejects_mismatched_rows():
    rng = np.random.default_rng(1)
    s = Sample(y=np.zeros(4), x=rng.normal(size=(5, 3)))
    with pytest.raises(DimensionMismatch):
        validate_sample(s, EstimatorSpec(kind="mrc"))


def test_validate_rejects_single_column_x():
    # one column leaves no free coordinate after the leading 1 normalization
    s = Sample(y=np.zeros(4), x=np.zeros((4, 1)))
    with pytest.raises(DimensionMismatch):
        validate_sample(s, EstimatorSpec(kind="mrc"))


def test_validate_rejects_nonfinite():
    x = np.zeros((3, 2))
    x[1, 1] = np.nan
    s = Sample(y=np.zeros(3), x=x)
    with pytest.raises(NonFiniteValue):
        validate_sample(s, EstimatorSpec(kind="mrc"))


def test_beta_full_prepends_one():
    b = Beta(theta=np.array([2.0, -1.0]))
    assert b.full.tolist() == [1.0, 2.0, -1.0]


def test_full_coefficients_matches_beta():
    assert full_coefficients([3.0]).tolist() == [1.0, 3.0]


def test_as_theta_validates_length():
    with pytest.raises(DimensionMismatch):
        as_theta([1.0, 2.0], p=3)


def test_as_theta_rejects_nonfinite():
    with pytest.raises(NonFiniteValue):
        as_theta([np.inf], p=1)


def test_search_domain_contains():
    dom = SearchDomain(lo=np.array([-1.0, 0.0]), hi=np.array([1.0, 2.0]))
    assert dom.contains([0.0, 1.0])
    assert not dom.contains([2.0, 1.0])


def test_search_domain_around_default_width():
    dom = SearchDomain.around([1.0, -2.0])
    assert dom.lo.tolist() == [-9.0, -12.0]
    assert dom.hi.tolist() == [11.0, 8.0]


def test_search_domain_rejects_crossed_bounds():
    with pytest.raises(InvalidArgument):
        SearchDomain(lo=np.array([1.0]), hi=np.array([0.0]))


def test_spec_validates_kind():
    with pytest.raises(InvalidArgument):
        EstimatorSpec(kind="nope").validate()


def test_spec_bandwidth_power_law():
    spec = EstimatorSpec(kind="as", bandwidth_c=2.0, bandwidth_delta=0.5)
    assert spec.bandwidth(25) == pytest.approx(2.0 * 25 ** -0.5)


def test_cs_requires_ordered_trim():
    spec = EstimatorSpec(kind="cs", trim_lo=1.0, trim_hi=-1.0)
    with pytest.raises(InvalidArgument):
        spec.validate()


def test_validate_sample_kt_needs_r_and_v():
    s = make_sample()
    with pytest.raises(MissingColumn):
        validate_sample(s, EstimatorSpec(kind="kt"))


def test_validate_sample_kt_r_must_be_binary():
    n = 8
    rng = np.random.default_rng(3)
    s = Sample(
        y=np.zeros(n),
        x=rng.normal(size=(n, 3)),
        r=rng.normal(size=n),  # not 0/1
        v=rng.normal(size=n),
    )
    with pytest.raises(InvalidArgument):
        validate_sample(s, EstimatorSpec(kind="kt"))


def test_validate_sample_as_needs_w():
    s = make_sample()
    spec = EstimatorSpec(kind="as", bandwidth_c=1.0, bandwidth_delta=0.2)
    with pytest.raises(MissingColumn):
        validate_sample(s, spec)


def test_validate_sample_r_v_paired():
    n = 6
    rng = np.random.default_rng(4)
    s = Sample(y=np.zeros(n), x=rng.normal(size=(n, 3)), r=np.ones(n))
    with pytest.raises(MissingColumn):
        validate_sample(s, EstimatorSpec(kind="mrc"))


def test_validate_sample_mrc_accepts_plain():
    validate_sample(make_sample(), EstimatorSpec(kind="mrc"))
