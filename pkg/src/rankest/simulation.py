"""Monte Carlo lab: binary-choice DGP, coverage/MAE/rate studies, diagnostics.

The data generating process is a binary choice model

    Y = 1(X' beta_star + eps >= 0),   X ~ N(0, Sigma),  eps ~ N(0, 1)

with AR(1) covariance ``Sigma_jk = rho ** |j - k|`` of dimension p + 1 and
``beta_star = (2, 4, ..., 2 (p + 1))``; after the scale normalisation the
true free coefficients are ``theta0 = (2, 3, ..., p + 1)``.

Three studies are provided:

- :func:`run_coverage`: coverage of two-sided normal confidence intervals
  for projections ``gamma' theta`` whose width uses the replication
  standard deviation of the Monte Carlo itself (not the analytic
  covariance estimator).
- :func:`run_mae`: median absolute error of the numerical-derivative
  variance estimate ``gamma' sandwich gamma`` over a grid of step
  multipliers, against a truth target ``n * Var(gamma' theta_hat)``
  estimated from a larger independent run.
- :func:`run_rate_check`: log-log regression of the root mean squared
  estimation error on the sample size.

Replications are embarrassingly parallel.  Every replication derives its
own counter-based stream from the master seed, its study and its index,
and results are collected into replication-indexed slots, so output is
bit-identical for any worker count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.special import kolmogorov, ndtr
from scipy.stats import chi2, norm

from .covariance import estimate_covariance, step_for_multiplier
from .data import EstimatorSpec, Sample, as_theta
from .errors import DegenerateSample, InvalidArgument, SingularHessian
from .fitting import FitOptions, fit
from .objectives import gaussian_kernel
from .rng import _splitmix64, generator, standard_normal

#: Nominal levels of the coverage tables.
DEFAULT_LEVELS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
#: Step multipliers of the covariance tuning scan.
DEFAULT_MULTIPLIERS = (1.1, 0.9, 0.7, 0.5, 0.3, 0.1)
#: Fixed evaluation grid for figure-style density comparisons.
FIGURE_GRID = np.linspace(-4.0, 4.0, 201)

# Distinct study identifiers feeding the stream-splitting rule.
_STREAM_COVERAGE = 1
_STREAM_MAE_TRUTH = 2
_STREAM_MAE_EST = 3
_STREAM_RATES = 4

_MASK64 = (1 << 64) - 1


def _subseed(master_seed: int, *path: int) -> int:
    """64-bit sub-seed for (master seed, study, cell..., replication)."""
    h = _splitmix64(int(master_seed) & _MASK64)
    for part in path:
        h = _splitmix64(h ^ _splitmix64(int(part) & _MASK64))
    return h


@dataclass(frozen=True)
class DgpConfig:
    """Binary-choice data generating process."""

    n: int
    p: int
    rho: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgument("DGP requires n >= 2")
        if self.p < 1:
            raise InvalidArgument("DGP requires p >= 1")
        if not abs(self.rho) < 1:
            raise InvalidArgument("DGP requires |rho| < 1")
        if self.seed < 0:
            raise InvalidArgument("seed must be a non-negative integer")

    @property
    def beta_star(self) -> np.ndarray:
        return 2.0 * np.arange(1, self.p + 2, dtype=np.float64)

    @property
    def theta0(self) -> np.ndarray:
        """Free coefficients after normalising the leading one: (2, ..., p+1)."""
        return self.beta_star[1:] / self.beta_star[0]


def generate_binary_choice(cfg: DgpConfig) -> Tuple[Sample, np.ndarray]:
    """Draw one sample from the binary-choice DGP.

    X is drawn by applying the lower Cholesky factor of the AR(1)
    covariance to i.i.d. standard normals (X first, then eps, in a fixed
    order).  Returns the sample and the true free coefficient vector.
    """
    gen = generator(cfg.seed)
    dim = cfg.p + 1
    sigma = toeplitz(cfg.rho ** np.arange(dim))
    chol_lower = cholesky(sigma, lower=True)
    z = standard_normal(gen, (cfg.n, dim))
    x = z @ chol_lower.T
    eps = standard_normal(gen, (cfg.n,))
    y = (x @ cfg.beta_star + eps >= 0.0).astype(np.float64)
    return Sample(y=y, x=x), cfg.theta0


def default_projections(p: int) -> List[Tuple[str, np.ndarray]]:
    """The three standard projection directions, with readable identifiers."""
    return [
        ("ones", np.ones(p)),
        ("e1", np.eye(p)[0].copy()),
        ("ramp", np.arange(1.0, p + 1.0)),
    ]


@dataclass(frozen=True)
class MonteCarloConfig:
    """Design of a coverage study."""

    dgp: DgpConfig
    reps: int
    estimator: EstimatorSpec = EstimatorSpec(kind="mrc")
    projections: Optional[Sequence[Tuple[str, np.ndarray]]] = None
    nominal_levels: Sequence[float] = DEFAULT_LEVELS
    init_at_truth: bool = True

    def __post_init__(self):
        if self.reps < 2:
            raise InvalidArgument("coverage study requires reps >= 2")
        for level in self.nominal_levels:
            if not 0.0 < level < 1.0:
                raise InvalidArgument(f"nominal level {level} outside (0, 1)")

    def resolved_projections(self) -> List[Tuple[str, np.ndarray]]:
        if self.projections is None:
            return default_projections(self.dgp.p)
        out = []
        for name, vec in self.projections:
            arr = as_theta(vec, self.dgp.p)
            if not np.any(arr != 0.0):
                raise InvalidArgument(f"projection {name!r} is the zero vector")
            out.append((str(name), arr))
        return out


@dataclass(frozen=True)
class CoverageRow:
    n: int
    p: int
    nominal_level: float
    projection_id: str
    empirical_coverage: float
    mc_standard_error: float


@dataclass(frozen=True)
class CoverageReport:
    """Coverage table plus the raw projected estimates behind it."""

    rows: Tuple[CoverageRow, ...]
    estimates: np.ndarray  # reps x n_projections, gamma' theta_hat
    projection_ids: Tuple[str, ...]
    projections: Tuple[np.ndarray, ...]
    theta0: np.ndarray
    sds: np.ndarray  # per-projection replication SD
    metadata: Dict = field(default_factory=dict)

    def normalized_estimates(self, projection_id: str) -> np.ndarray:
        """Estimates centred at the truth and scaled by the replication SD."""
        idx = self.projection_ids.index(projection_id)
        center = float(self.projections[idx] @ self.theta0)
        return (self.estimates[:, idx] - center) / self.sds[idx]


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None or threads == 0:
        import os

        return os.cpu_count() or 1
    if threads < 1:
        raise InvalidArgument("threads must be a positive integer")
    return int(threads)


def _map_indexed(worker: Callable[[int], object], count: int, threads: Optional[int]) -> list:
    """Run ``worker`` over range(count) with results in index order."""
    n_workers = _resolve_threads(threads)
    if n_workers == 1 or count <= 1:
        return [worker(i) for i in range(count)]
    chunk = max(1, count // (n_workers * 8))
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, range(count), chunksize=chunk))


def _coverage_worker(rep: int, dgp: DgpConfig, estimator: EstimatorSpec,
                     proj_matrix: np.ndarray, init_at_truth: bool) -> np.ndarray:
    sub = _subseed(dgp.seed, _STREAM_COVERAGE, rep)
    sample, theta0 = generate_binary_choice(replace(dgp, seed=sub))
    init = theta0 if init_at_truth else np.zeros(dgp.p)
    result = fit(sample, estimator, FitOptions(init=init))
    return proj_matrix @ result.theta


def run_coverage(cfg: MonteCarloConfig, threads: Optional[int] = None) -> CoverageReport:
    """Coverage of normal CIs whose width is the replication SD.

    For every replication a fresh sample is drawn from its own sub-stream
    and fitted (initialised at the truth when ``init_at_truth``).  The CI
    for projection gamma at level L is ``gamma' theta0 +- z * s_gamma``
    with ``s_gamma`` the sample SD of the replicated ``gamma' theta_hat``.
    """
    projections = cfg.resolved_projections()
    proj_matrix = np.vstack([vec for _, vec in projections])
    worker = partial(
        _coverage_worker,
        dgp=cfg.dgp,
        estimator=cfg.estimator,
        proj_matrix=proj_matrix,
        init_at_truth=cfg.init_at_truth,
    )
    estimates = np.vstack(_map_indexed(worker, cfg.reps, threads))

    theta0 = cfg.dgp.theta0
    centers = proj_matrix @ theta0
    sds = np.std(estimates, axis=0, ddof=1)
    rows = []
    for g, (name, _) in enumerate(projections):
        abs_dev = np.abs(estimates[:, g] - centers[g])
        for level in cfg.nominal_levels:
            z = float(norm.ppf(0.5 * (1.0 + level)))
            coverage = float(np.mean(abs_dev <= z * sds[g]))
            se = float(np.sqrt(coverage * (1.0 - coverage) / cfg.reps))
            rows.append(
                CoverageRow(
                    n=cfg.dgp.n,
                    p=cfg.dgp.p,
                    nominal_level=float(level),
                    projection_id=name,
                    empirical_coverage=coverage,
                    mc_standard_error=se,
                )
            )
    metadata = {
        "seed": cfg.dgp.seed,
        "reps": cfg.reps,
        "n": cfg.dgp.n,
        "p": cfg.dgp.p,
        "rho": cfg.dgp.rho,
        "estimator": cfg.estimator.kind,
        "init_at_truth": cfg.init_at_truth,
        "sd_source": "simulation",
        "projection_sds": {name: float(sds[g]) for g, (name, _) in enumerate(projections)},
    }
    return CoverageReport(
        rows=tuple(rows),
        estimates=estimates,
        projection_ids=tuple(name for name, _ in projections),
        projections=tuple(vec for _, vec in projections),
        theta0=theta0,
        sds=sds,
        metadata=metadata,
    )


@dataclass(frozen=True)
class MaeRow:
    n: int
    p: int
    epsilon_multiplier: float
    mae: float
    excluded: int


@dataclass(frozen=True)
class MaeReport:
    rows: Tuple[MaeRow, ...]
    metadata: Dict = field(default_factory=dict)


def _mae_truth_worker(rep: int, dgp: DgpConfig, estimator: EstimatorSpec,
                      gamma: np.ndarray, cell: int) -> float:
    sub = _subseed(dgp.seed, _STREAM_MAE_TRUTH, cell, rep)
    sample, theta0 = generate_binary_choice(replace(dgp, seed=sub))
    result = fit(sample, estimator, FitOptions(init=theta0))
    return float(gamma @ result.theta)


def _mae_estimate_worker(rep: int, dgp: DgpConfig, estimator: EstimatorSpec,
                         gamma: np.ndarray, multipliers: Tuple[float, ...],
                         cell: int) -> np.ndarray:
    sub = _subseed(dgp.seed, _STREAM_MAE_EST, cell, rep)
    sample, theta0 = generate_binary_choice(replace(dgp, seed=sub))
    result = fit(sample, estimator, FitOptions(init=theta0))
    out = np.empty(len(multipliers))
    for m, mult in enumerate(multipliers):
        eps = step_for_multiplier(dgp.n, mult)
        try:
            cov = estimate_covariance(sample, estimator, result.theta, eps)
            out[m] = float(gamma @ cov.sandwich @ gamma)
        except SingularHessian:
            out[m] = np.nan
    return out


def run_mae(
    grid: Sequence[Tuple[int, int]],
    multipliers: Optional[Sequence[float]] = None,
    reps: int = 500,
    truth_reps: int = 2000,
    seed: int = 0,
    rho: float = 0.5,
    estimator: Optional[EstimatorSpec] = None,
    threads: Optional[int] = None,
) -> MaeReport:
    """Median absolute error of the variance estimate over a step grid.

    For every cell (n, p) the projection is ``gamma = (1, ..., 1) / sqrt(p)``.
    The truth target ``sigma2_true = n * Var(gamma' theta_hat)`` comes from
    ``truth_reps`` independent fits on their own seed stream; each of the
    ``reps`` estimation replications fits once and evaluates the sandwich
    variance at every step ``m * n ** (-1/6)``.  Replications whose Hessian
    is singular are excluded and counted; a cell with more than 20%
    exclusions gets NaN.
    """
    if multipliers is None:
        multipliers = DEFAULT_MULTIPLIERS
    multipliers = tuple(float(m) for m in multipliers)
    if any(m <= 0 for m in multipliers):
        raise InvalidArgument("step multipliers must be positive")
    if reps < 2:
        raise InvalidArgument("mae study requires reps >= 2")
    if truth_reps < reps:
        raise InvalidArgument("truth_reps must be at least reps (truth run must dominate)")
    if estimator is None:
        estimator = EstimatorSpec(kind="mrc")

    rows = []
    sigma2_true_by_cell = {}
    for cell, (n, p) in enumerate(grid):
        dgp = DgpConfig(n=int(n), p=int(p), rho=rho, seed=seed)
        gamma = np.full(p, 1.0 / np.sqrt(p))

        truth_worker = partial(
            _mae_truth_worker, dgp=dgp, estimator=estimator, gamma=gamma, cell=cell
        )
        truth_proj = np.asarray(_map_indexed(truth_worker, truth_reps, threads))
        sigma2_true = float(n * np.var(truth_proj, ddof=1))
        sigma2_true_by_cell[f"{n}:{p}"] = sigma2_true

        est_worker = partial(
            _mae_estimate_worker,
            dgp=dgp,
            estimator=estimator,
            gamma=gamma,
            multipliers=multipliers,
            cell=cell,
        )
        sig2 = np.vstack(_map_indexed(est_worker, reps, threads))

        for m, mult in enumerate(multipliers):
            col = sig2[:, m]
            good = col[np.isfinite(col)]
            excluded = int(reps - good.shape[0])
            if excluded > 0.2 * reps:
                mae = float("nan")
            else:
                mae = float(np.median(np.abs(good - sigma2_true)))
            rows.append(
                MaeRow(n=int(n), p=int(p), epsilon_multiplier=mult, mae=mae, excluded=excluded)
            )

    metadata = {
        "seed": seed,
        "reps": reps,
        "truth_reps": truth_reps,
        "rho": rho,
        "estimator": estimator.kind,
        "multipliers": list(multipliers),
        "truth_oracle": (
            "sigma2_true = n * Var(gamma' theta_hat) over truth_reps independent "
            "fits initialised at the truth, gamma = (1,...,1)/sqrt(p)"
        ),
        "sigma2_true": sigma2_true_by_cell,
    }
    return MaeReport(rows=tuple(rows), metadata=metadata)


@dataclass(frozen=True)
class RateRow:
    n: int
    rmse: float


@dataclass(frozen=True)
class RateCheckReport:
    rows: Tuple[RateRow, ...]
    slope: float
    slope_se: float
    metadata: Dict = field(default_factory=dict)


def _rate_worker(rep: int, n: int, p: int, estimator: EstimatorSpec, seed: int,
                 grid_index: int, rho: float,
                 dgp_draw: Optional[Callable] = None) -> float:
    sub = _subseed(seed, _STREAM_RATES, grid_index, rep)
    if dgp_draw is None:
        sample, theta0 = generate_binary_choice(DgpConfig(n=n, p=p, rho=rho, seed=sub))
    else:
        sample, theta0 = dgp_draw(n, p, sub)
    result = fit(sample, estimator, FitOptions(init=theta0))
    diff = result.theta - theta0
    return float(diff @ diff)


def run_rate_check(
    estimator: EstimatorSpec,
    n_grid: Sequence[int],
    p_fixed: int,
    reps: int,
    seed: int,
    rho: float = 0.5,
    threads: Optional[int] = None,
    dgp_draw: Optional[Callable] = None,
) -> RateCheckReport:
    """Slope of log RMSE against log n over a sample-size grid.

    ``dgp_draw(n, p, seed) -> (sample, theta0)`` may replace the default
    binary-choice DGP (useful for diagnostics).  A degenerate study —
    zero or constant RMSE across the grid, as happens when the objective
    never moves off the initial point — triggers a misconfiguration
    warning; with a zero RMSE the slope is undefined and reported as NaN.
    """
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 3:
        raise InvalidArgument("rate check needs at least 3 grid points")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InvalidArgument("n_grid must be strictly increasing")
    if reps < 2:
        raise InvalidArgument("rate check requires reps >= 2")

    rmse = np.empty(len(n_grid))
    for gi, n in enumerate(n_grid):
        worker = partial(
            _rate_worker,
            n=n,
            p=p_fixed,
            estimator=estimator,
            seed=seed,
            grid_index=gi,
            rho=rho,
            dgp_draw=dgp_draw,
        )
        sq_errors = np.asarray(_map_indexed(worker, reps, threads))
        rmse[gi] = float(np.sqrt(np.mean(sq_errors)))

    if rmse.min() == 0.0:
        warnings.warn(
            "rate check looks misconfigured: RMSE of zero (estimator never moved)",
            stacklevel=2,
        )
        slope, slope_se = float("nan"), float("nan")
    else:
        if rmse.max() - rmse.min() <= 1e-12 * rmse.max():
            warnings.warn(
                "rate check looks misconfigured: RMSE constant across the n grid",
                stacklevel=2,
            )
        log_n = np.log(np.asarray(n_grid, dtype=np.float64))
        log_rmse = np.log(rmse)
        x_center = log_n - log_n.mean()
        slope = float(np.sum(x_center * log_rmse) / np.sum(x_center**2))
        intercept = float(log_rmse.mean() - slope * log_n.mean())
        residuals = log_rmse - (intercept + slope * log_n)
        dof = len(n_grid) - 2
        sigma2 = float(np.sum(residuals**2) / dof)
        slope_se = float(np.sqrt(sigma2 / np.sum(x_center**2)))

    metadata = {
        "seed": seed,
        "reps": reps,
        "p": p_fixed,
        "rho": rho,
        "estimator": estimator.kind,
        "n_grid": list(n_grid),
    }
    return RateCheckReport(
        rows=tuple(RateRow(n=n, rmse=float(r)) for n, r in zip(n_grid, rmse)),
        slope=slope,
        slope_se=slope_se,
        metadata=metadata,
    )


def kde(samples, grid) -> np.ndarray:
    """Gaussian kernel density estimate with the rule-of-thumb bandwidth.

    ``h = 0.9 * min(s, IQR / 1.34) * m ** (-1/5)``; when the IQR is zero
    (heavily tied data) the spread falls back to the SD alone so the
    bandwidth stays positive.
    """
    x = np.asarray(samples, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DegenerateSample("kde needs a 1-d sample of length >= 2")
    if not np.all(np.isfinite(x)):
        raise DegenerateSample("kde input contains non-finite values")
    s = float(np.std(x, ddof=1))
    if s == 0.0:
        raise DegenerateSample("kde input has zero standard deviation")
    q75, q25 = np.percentile(x, [75.0, 25.0])
    spread = min(s, (q75 - q25) / 1.34)
    if spread == 0.0:
        spread = s
    h = 0.9 * spread * x.shape[0] ** (-0.2)
    z = (grid[:, None] - x[None, :]) / h
    return gaussian_kernel(z).mean(axis=1) / h


def normality_tests(samples) -> Dict[str, Tuple[float, float]]:
    """Kolmogorov-Smirnov (vs N(0,1), asymptotic p) and Jarque-Bera tests.

    The caller standardises the sample; both tests are returned as
    ``name -> (statistic, p_value)``.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DegenerateSample("normality tests need a 1-d sample of length >= 2")
    if not np.all(np.isfinite(x)):
        raise DegenerateSample("normality test input contains non-finite values")
    m = x.shape[0]
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        raise DegenerateSample("normality test input has zero variance")

    x_sorted = np.sort(x, kind="stable")
    cdf = ndtr(x_sorted)
    steps_hi = np.arange(1, m + 1, dtype=np.float64) / m
    steps_lo = np.arange(0, m, dtype=np.float64) / m
    d_stat = float(max(np.max(steps_hi - cdf), np.max(cdf - steps_lo)))
    p_ks = float(kolmogorov(np.sqrt(m) * d_stat))

    skew = float(np.mean(centered**3)) / m2**1.5
    excess_kurt = float(np.mean(centered**4)) / m2**2 - 3.0
    jb = m / 6.0 * (skew**2 + excess_kurt**2 / 4.0)
    p_jb = float(chi2.sf(jb, df=2))

    return {"ks": (d_stat, p_ks), "jarque_bera": (float(jb), p_jb)}
