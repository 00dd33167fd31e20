"""Simulation lab: DGP, coverage/MAE/rate studies, density and normality tools."""

import numpy as np
import pytest
from scipy import stats
from scipy.linalg import toeplitz

from rankest.data import EstimatorSpec
from rankest.errors import DegenerateSample, InvalidArgument
from rankest.simulation import (
    DEFAULT_LEVELS,
    FIGURE_GRID,
    DgpConfig,
    MonteCarloConfig,
    default_projections,
    generate_binary_choice,
    kde,
    normality_tests,
    run_coverage,
    run_mae,
    run_rate_check,
)

MRC = EstimatorSpec(kind="mrc")


# ---------------------------------------------------------------- DGP


def test_dgp_coefficients():
    cfg = DgpConfig(n=10, p=2, seed=0)
    assert (cfg.beta_star == np.array([2.0, 4.0, 6.0])).all()
    assert (cfg.theta0 == np.array([2.0, 3.0])).all()


def test_dgp_validation():
    with pytest.raises(InvalidArgument):
        DgpConfig(n=1, p=1)
    with pytest.raises(InvalidArgument):
        DgpConfig(n=10, p=0)
    with pytest.raises(InvalidArgument):
        DgpConfig(n=10, p=1, rho=1.0)
    with pytest.raises(InvalidArgument):
        DgpConfig(n=10, p=1, seed=-3)


def test_dgp_is_deterministic_in_seed():
    a, _ = generate_binary_choice(DgpConfig(n=50, p=2, seed=11))
    b, _ = generate_binary_choice(DgpConfig(n=50, p=2, seed=11))
    c, _ = generate_binary_choice(DgpConfig(n=50, p=2, seed=12))
    assert (a.x == b.x).all() and (a.y == b.y).all()
    assert (a.x != c.x).any()


def test_dgp_moments_match_design():
    # X rows should be centred normal with AR(1) covariance rho^{|i-j|};
    # the response is a symmetric binary indicator, so P(y=1) = 1/2.
    rho = 0.5
    sample, theta0 = generate_binary_choice(DgpConfig(n=200_000, p=2, rho=rho, seed=3))
    assert set(np.unique(sample.y)) <= {0.0, 1.0}
    assert abs(sample.y.mean() - 0.5) < 0.01
    assert np.abs(sample.x.mean(axis=0)).max() < 0.02
    emp = np.cov(sample.x, rowvar=False)
    assert np.abs(emp - toeplitz(rho ** np.arange(3))).max() < 0.02
    assert (theta0 == np.array([2.0, 3.0])).all()


# ---------------------------------------------------------------- coverage


def small_coverage_config(p=2, reps=40, seed=21, **kwargs):
    dgp = DgpConfig(n=30, p=p, rho=0.5, seed=seed)
    return MonteCarloConfig(dgp=dgp, reps=reps, estimator=MRC, **kwargs)


def test_coverage_config_validation():
    dgp = DgpConfig(n=30, p=1, seed=0)
    with pytest.raises(InvalidArgument):
        MonteCarloConfig(dgp=dgp, reps=1)
    with pytest.raises(InvalidArgument):
        MonteCarloConfig(dgp=dgp, reps=10, nominal_levels=(0.5, 1.0))
    cfg = MonteCarloConfig(dgp=dgp, reps=10, projections=[("zero", [0.0])])
    with pytest.raises(InvalidArgument):
        cfg.resolved_projections()


def test_coverage_report_shape_and_monotonicity():
    cfg = small_coverage_config()
    report = run_coverage(cfg, threads=1)
    assert report.estimates.shape == (cfg.reps, 3)
    assert len(report.rows) == 3 * len(DEFAULT_LEVELS)
    # for a fixed projection the same deviations are compared against a
    # half-width that grows with the level, so coverage is non-decreasing
    for pid in report.projection_ids:
        covs = [
            r.empirical_coverage
            for r in report.rows
            if r.projection_id == pid
        ]
        assert all(b >= a for a, b in zip(covs, covs[1:]))
    for r in report.rows:
        assert 0.0 <= r.empirical_coverage <= 1.0
        assert r.mc_standard_error >= 0.0
        assert r.n == 30 and r.p == 2


def test_coverage_p1_directions_collapse():
    # with one free coefficient every default direction is the same axis
    assert [vec[0] for _, vec in default_projections(1)] == [1.0, 1.0, 1.0]
    report = run_coverage(small_coverage_config(p=1, reps=30), threads=1)
    est = report.estimates
    assert (est[:, 0] == est[:, 1]).all() and (est[:, 0] == est[:, 2]).all()
    by_level = {}
    for r in report.rows:
        by_level.setdefault(r.nominal_level, set()).add(r.empirical_coverage)
    assert all(len(v) == 1 for v in by_level.values())


def test_coverage_invariant_under_projection_scaling():
    # doubling gamma doubles both the deviations and the replication SD,
    # and scaling by a power of two is exact, so coverage is bitwise equal
    base = small_coverage_config(projections=[("g", [1.0, -1.0])])
    scaled = small_coverage_config(projections=[("g", [2.0, -2.0])])
    r1 = run_coverage(base, threads=1)
    r2 = run_coverage(scaled, threads=1)
    assert (r2.estimates == 2.0 * r1.estimates).all()
    for a, b in zip(r1.rows, r2.rows):
        assert a.empirical_coverage == b.empirical_coverage


def test_coverage_identical_across_thread_counts():
    cfg = small_coverage_config(reps=12)
    r1 = run_coverage(cfg, threads=1)
    r2 = run_coverage(cfg, threads=2)
    assert (r1.estimates == r2.estimates).all()
    assert [r.empirical_coverage for r in r1.rows] == [
        r.empirical_coverage for r in r2.rows
    ]


def test_normalized_estimates_definition():
    report = run_coverage(small_coverage_config(reps=25), threads=1)
    idx = report.projection_ids.index("ramp")
    want = (report.estimates[:, idx] - report.projections[idx] @ report.theta0)
    want = want / report.sds[idx]
    assert (report.normalized_estimates("ramp") == want).all()


# ---------------------------------------------------------------- mae study


def test_mae_guards():
    with pytest.raises(InvalidArgument):
        run_mae([(30, 1)], reps=10, truth_reps=5, seed=0)
    with pytest.raises(InvalidArgument):
        run_mae([(30, 1)], multipliers=(1.0, -0.5), reps=5, truth_reps=10, seed=0)
    with pytest.raises(InvalidArgument):
        run_mae([(30, 1)], reps=1, truth_reps=2, seed=0)


def test_mae_smoke_run():
    report = run_mae(
        [(80, 1)], multipliers=(1.1, 0.3), reps=6, truth_reps=12, seed=1, threads=1
    )
    assert len(report.rows) == 2
    for row in report.rows:
        assert row.n == 80 and row.p == 1
        assert 0 <= row.excluded <= 6
        assert np.isfinite(row.mae) and row.mae >= 0.0
    sigma2 = report.metadata["sigma2_true"]["80:1"]
    assert np.isfinite(sigma2) and sigma2 > 0.0
    # rerun is bitwise identical
    again = run_mae(
        [(80, 1)], multipliers=(1.1, 0.3), reps=6, truth_reps=12, seed=1, threads=1
    )
    assert [r.mae for r in again.rows] == [r.mae for r in report.rows]


# ---------------------------------------------------------------- rate study


def test_rate_check_validation():
    with pytest.raises(InvalidArgument):
        run_rate_check(MRC, n_grid=(25, 50), p_fixed=1, reps=5, seed=0)
    with pytest.raises(InvalidArgument):
        run_rate_check(MRC, n_grid=(25, 50, 50), p_fixed=1, reps=5, seed=0)
    with pytest.raises(InvalidArgument):
        run_rate_check(MRC, n_grid=(25, 50, 100), p_fixed=1, reps=1, seed=0)


def test_rate_check_smoke():
    report = run_rate_check(
        MRC, n_grid=(25, 50, 100), p_fixed=1, reps=8, seed=5, threads=1
    )
    assert [r.n for r in report.rows] == [25, 50, 100]
    assert all(r.rmse > 0.0 for r in report.rows)
    assert np.isfinite(report.slope) and np.isfinite(report.slope_se)
    assert report.slope < 0.0  # errors shrink with n


def test_rate_check_warns_when_estimator_never_moves():
    # constant response: the objective is flat, fits stay at the truth,
    # RMSE is exactly zero and the slope is undefined
    from rankest.data import Sample

    def flat_draw(n, p, seed):
        rng = np.random.default_rng(seed % 2**32)
        return Sample(y=np.zeros(n), x=rng.normal(size=(n, p + 1))), np.zeros(p)

    with pytest.warns(UserWarning, match="misconfigured"):
        report = run_rate_check(
            MRC, n_grid=(20, 40, 80), p_fixed=1, reps=3, seed=0, threads=1,
            dgp_draw=flat_draw,
        )
    assert np.isnan(report.slope)


# ---------------------------------------------------------------- kde


def test_kde_matches_naive_evaluation():
    rng = np.random.default_rng(17)
    x = rng.normal(size=200)
    grid = np.linspace(-3, 3, 41)
    s = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    h = 0.9 * min(s, (q75 - q25) / 1.34) * x.shape[0] ** (-0.2)
    naive = np.array(
        [np.mean(stats.norm.pdf((g - x) / h)) / h for g in grid]
    )
    assert np.abs(kde(x, grid) - naive).max() < 1e-12


def test_kde_close_to_true_density_on_large_sample():
    rng = np.random.default_rng(29)
    x = rng.normal(size=10_000)
    dens = kde(x, FIGURE_GRID)
    assert (dens >= 0.0).all()
    assert np.abs(dens - stats.norm.pdf(FIGURE_GRID)).max() <= 0.02
    integral = np.trapezoid(dens, FIGURE_GRID)
    assert 0.99 <= integral <= 1.01


def test_kde_handles_heavy_ties_via_sd_fallback():
    x = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    dens = kde(x, np.array([0.0, 0.5]))
    assert np.isfinite(dens).all() and (dens > 0.0).all()


def test_kde_degenerate_inputs():
    with pytest.raises(DegenerateSample):
        kde(np.array([1.0]), np.array([0.0]))
    with pytest.raises(DegenerateSample):
        kde(np.array([2.0, 2.0, 2.0]), np.array([0.0]))
    with pytest.raises(DegenerateSample):
        kde(np.array([1.0, np.nan]), np.array([0.0]))


# ---------------------------------------------------------------- normality


def test_ks_matches_scipy_asymptotic():
    rng = np.random.default_rng(31)
    x = rng.normal(size=500)
    got = normality_tests(x)["ks"]
    ref = stats.kstest(x, "norm", mode="asymp")
    assert abs(got[0] - ref.statistic) < 1e-12
    assert abs(got[1] - ref.pvalue) < 1e-12


def test_jarque_bera_matches_scipy():
    rng = np.random.default_rng(37)
    x = rng.normal(size=800) + 0.3 * rng.exponential(size=800)
    got = normality_tests(x)["jarque_bera"]
    ref = stats.jarque_bera(x)
    assert abs(got[0] - ref.statistic) < 1e-10
    assert abs(got[1] - ref.pvalue) < 1e-10


def test_normality_calibration():
    rng = np.random.default_rng(41)
    z = rng.normal(size=4000)
    out = normality_tests(z)
    assert out["ks"][1] > 0.01
    assert out["jarque_bera"][1] > 0.01
    skewed = rng.exponential(size=4000) - 1.0
    out = normality_tests(skewed)
    assert out["jarque_bera"][1] < 1e-4


def test_normality_degenerate_inputs():
    with pytest.raises(DegenerateSample):
        normality_tests(np.array([1.0]))
    with pytest.raises(DegenerateSample):
        normality_tests(np.array([3.0, 3.0, 3.0]))
    with pytest.raises(DegenerateSample):
        normality_tests(np.array([0.0, np.inf]))
