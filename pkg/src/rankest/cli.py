"""Command-line interface: dataset ingestion, experiments, report emission.

Commands
--------
- ``rankest estimate``  — fit one dataset from CSV, optionally with the
  sandwich covariance and projection confidence intervals; writes JSON.
- ``rankest simulate coverage|mae|rates`` — run a Monte Carlo study and
  write a CSV table plus a JSON metadata sidecar (``<out>.meta.json``).
- ``rankest density``   — kernel density of a one-column sample against the
  standard normal reference, plus normality tests in the sidecar.

Contracts: exit 2 on I/O or parse problems, 3 on validation/config errors,
4 on a singular Hessian; diagnostics go to stderr and stdout carries only
output paths.  Numbers are serialized with 17 significant digits so every
float round-trips exactly.  Output files are written to a temporary file
and atomically renamed, and re-running any simulate command with the same
seed gives byte-identical files at any ``--threads`` value (the worker
count is execution plumbing and is deliberately not echoed into metadata).

Config precedence for every command: flag > ``--config`` JSON file >
documented default; the fully resolved configuration is echoed into the
output metadata.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .covariance import estimate_covariance, projection_ci
from .data import EstimatorSpec, Sample, validate_sample
from .errors import RankestError, SingularHessian
from .fitting import FitOptions, fit
from .objectives import objective
from .simulation import (
    DEFAULT_LEVELS,
    DEFAULT_MULTIPLIERS,
    FIGURE_GRID,
    DgpConfig,
    MonteCarloConfig,
    kde,
    normality_tests,
    run_coverage,
    run_mae,
    run_rate_check,
)
from .objectives import gaussian_kernel


class ParseError(Exception):
    """Unreadable or structurally invalid input file (exit code 2)."""


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("rankest")
    except Exception:  # pragma: no cover - metadata missing in odd installs
        return "unknown"


# ---------------------------------------------------------------------------
# Serialization: 17 significant digits, deterministic layout, atomic writes.
# ---------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if isinstance(x, float) and not np.isfinite(x):
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(float(x), ".17g")


def _json_fragment(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _json_fragment(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_fragment(v) for v in obj) + "]"
    if isinstance(obj, dict):
        parts = [f"{json.dumps(str(k))}: {_json_fragment(v)}" for k, v in obj.items()]
        return "{" + ", ".join(parts) + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rankest-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj) -> None:
    _atomic_write(path, _json_fragment(obj) + "\n")


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(_fmt_float(float(cell)))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Input parsing.
# ---------------------------------------------------------------------------

def _parse_float_list(text: str) -> List[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ParseError(f"cannot parse float list {text!r}") from exc


def _parse_int_list(text: str) -> List[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ParseError(f"cannot parse integer list {text!r}") from exc


def _parse_grid(text: str) -> List[Tuple[int, int]]:
    cells = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            n_str, p_str = tok.split(":")
            cells.append((int(n_str), int(p_str)))
        except ValueError as exc:
            raise ParseError(f"cannot parse grid cell {tok!r}; expected n:p") from exc
    if not cells:
        raise ParseError("empty (n, p) grid")
    return cells


def _read_dataset(path: str) -> Sample:
    """Read a dataset CSV: header with y, x1..x{p+1} and optional r, v, w."""
    try:
        with open(path, "r", newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty file")
            rows = list(reader)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc

    header = [h.strip() for h in header]
    if "y" not in header:
        raise ParseError(f"{path}: header must contain a 'y' column")
    x_names = []
    k = 1
    while f"x{k}" in header:
        x_names.append(f"x{k}")
        k += 1
    if len(x_names) < 2:
        raise ParseError(f"{path}: need contiguous columns x1, x2, ... (at least two)")
    if not rows:
        raise ParseError(f"{path}: no data rows")

    col_index = {name: header.index(name) for name in header}
    width = len(header)
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: row {i + 2} has {len(row)} cells, expected {width}")
        try:
            values[i] = [float(cell) for cell in row]
        except ValueError as exc:
            raise ParseError(f"{path}: row {i + 2} has a non-numeric cell") from exc

    def col(name: str) -> Optional[np.ndarray]:
        return values[:, col_index[name]] if name in col_index else None

    x = np.column_stack([values[:, col_index[name]] for name in x_names])
    return Sample(y=col("y"), x=x, r=col("r"), v=col("v"), w=col("w"))


def _read_sample_column(path: str) -> np.ndarray:
    """Read a one-column CSV of floats; a single header line is tolerated."""
    try:
        with open(path, "r", newline="") as handle:
            lines = [line.strip() for line in handle if line.strip() != ""]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not lines:
        raise ParseError(f"{path}: empty file")
    start = 0
    try:
        float(lines[0].split(",")[0])
    except ValueError:
        start = 1
    data = []
    for i, line in enumerate(lines[start:], start=start + 1):
        tok = line.split(",")[0]
        try:
            data.append(float(tok))
        except ValueError as exc:
            raise ParseError(f"{path}: line {i} is not numeric") from exc
    if not data:
        raise ParseError(f"{path}: no numeric rows")
    return np.asarray(data)


def _load_config_file(path: Optional[str]) -> Dict:
    if path is None:
        return {}
    try:
        with open(path, "r") as handle:
            loaded = json.load(handle)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(loaded, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    return loaded


def _resolve(args, file_cfg: Dict, defaults: Dict) -> Dict:
    """flag > config file > default, for every key in ``defaults``."""
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def _threads(args) -> Optional[int]:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("RANKEST_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ParseError(f"RANKEST_THREADS={env!r} is not an integer") from exc
    return None


# ---------------------------------------------------------------------------
# Commands.
# ---------------------------------------------------------------------------

def _build_spec(cfg: Dict) -> EstimatorSpec:
    return EstimatorSpec(
        kind=cfg["estimator"],
        trim_lo=cfg["trim_lo"],
        trim_hi=cfg["trim_hi"],
        bandwidth_c=cfg["bandwidth_c"],
        bandwidth_delta=cfg["bandwidth_delta"],
    )


def cmd_estimate(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _resolve(
        args,
        file_cfg,
        {
            "data": None,
            "estimator": "mrc",
            "trim_lo": None,
            "trim_hi": None,
            "bandwidth_c": None,
            "bandwidth_delta": None,
            "init": None,
            "cov": False,
            "epsilon": None,
            "project": None,
            "level": 0.95,
            "out": None,
        },
    )
    if cfg["data"] is None or cfg["out"] is None:
        raise ParseError("estimate requires --data and --out")

    sample = _read_dataset(cfg["data"])
    spec = _build_spec(cfg)
    validate_sample(sample, spec)

    init = None
    if cfg["init"] is not None:
        init = np.asarray(
            cfg["init"] if isinstance(cfg["init"], list) else _parse_float_list(cfg["init"])
        )
    result = fit(sample, spec, FitOptions(init=init))

    projections = []
    if cfg["project"]:
        raw_projections = cfg["project"]
        for item in raw_projections:
            projections.append(item if isinstance(item, list) else _parse_float_list(item))
    want_cov = bool(cfg["cov"]) or bool(projections)

    resolved_echo = dict(cfg)
    resolved_echo["init"] = list(init) if init is not None else [0.0] * sample.p
    resolved_echo["project"] = projections
    resolved_echo["cov"] = want_cov
    payload = {
        "command": "estimate",
        "package_version": _package_version(),
        "config": resolved_echo,
        "n": sample.n,
        "p": sample.p,
        "theta_hat": result.theta,
        "objective": {
            "value": result.objective.value,
            "num_pairs": result.objective.num_pairs,
            "raw_count": result.objective.raw_count,
        },
        "converged": result.converged,
        "sweeps": result.sweeps,
    }

    if want_cov:
        cov = estimate_covariance(sample, spec, result.theta, cfg["epsilon"])
        payload["covariance"] = {
            "delta": cov.delta_hat,
            "v": cov.v_hat,
            "sandwich": cov.sandwich,
            "epsilon": cov.epsilon,
            "v_condition": cov.v_condition,
        }
        if projections:
            cis = []
            for gamma in projections:
                lo, hi = projection_ci(result.theta, cov, gamma, sample.n, cfg["level"])
                cis.append({"projection": gamma, "level": cfg["level"], "lo": lo, "hi": hi})
            payload["ci"] = cis

    _write_json(cfg["out"], payload)
    print(cfg["out"])
    return 0


def cmd_simulate_coverage(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _resolve(
        args,
        file_cfg,
        {
            "n": None,
            "p": None,
            "reps": None,
            "seed": None,
            "levels": None,
            "rho": 0.5,
            "estimator": "mrc",
            "init_at_truth": True,
            "out": None,
        },
    )
    for key in ("n", "p", "reps", "seed", "out"):
        if cfg[key] is None:
            raise ParseError(f"simulate coverage requires --{key.replace('_', '-')}")
    levels = cfg["levels"]
    if levels is None:
        levels = list(DEFAULT_LEVELS)
    elif isinstance(levels, str):
        levels = _parse_float_list(levels)
    cfg["levels"] = levels

    mc = MonteCarloConfig(
        dgp=DgpConfig(n=int(cfg["n"]), p=int(cfg["p"]), rho=float(cfg["rho"]), seed=int(cfg["seed"])),
        reps=int(cfg["reps"]),
        estimator=EstimatorSpec(kind=cfg["estimator"]),
        nominal_levels=levels,
        init_at_truth=bool(cfg["init_at_truth"]),
    )
    report = run_coverage(mc, threads=_threads(args))

    header = ["n", "p", "nominal_level", "projection_id", "empirical_coverage", "mc_standard_error"]
    rows = [
        [r.n, r.p, r.nominal_level, r.projection_id, r.empirical_coverage, r.mc_standard_error]
        for r in report.rows
    ]
    _atomic_write(cfg["out"], _csv_text(header, rows))
    sidecar = {
        "command": "simulate coverage",
        "package_version": _package_version(),
        "config": cfg,
        "seed": int(cfg["seed"]),
        "metadata": report.metadata,
    }
    _write_json(cfg["out"] + ".meta.json", sidecar)
    print(cfg["out"])
    return 0


def cmd_simulate_mae(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _resolve(
        args,
        file_cfg,
        {
            "grid": None,
            "multipliers": None,
            "reps": None,
            "truth_reps": None,
            "seed": None,
            "rho": 0.5,
            "out": None,
        },
    )
    for key in ("grid", "reps", "truth_reps", "seed", "out"):
        if cfg[key] is None:
            raise ParseError(f"simulate mae requires --{key.replace('_', '-')}")
    grid = cfg["grid"]
    if isinstance(grid, str):
        grid = _parse_grid(grid)
    else:
        grid = [(int(n), int(p)) for n, p in grid]
    multipliers = cfg["multipliers"]
    if multipliers is None:
        multipliers = list(DEFAULT_MULTIPLIERS)
    elif isinstance(multipliers, str):
        multipliers = _parse_float_list(multipliers)
    cfg["grid"] = [f"{n}:{p}" for n, p in grid]
    cfg["multipliers"] = multipliers

    report = run_mae(
        grid,
        multipliers=multipliers,
        reps=int(cfg["reps"]),
        truth_reps=int(cfg["truth_reps"]),
        seed=int(cfg["seed"]),
        rho=float(cfg["rho"]),
        threads=_threads(args),
    )
    header = ["n", "p", "epsilon_multiplier", "mae", "excluded"]
    rows = [[r.n, r.p, r.epsilon_multiplier, r.mae, r.excluded] for r in report.rows]
    _atomic_write(cfg["out"], _csv_text(header, rows))
    sidecar = {
        "command": "simulate mae",
        "package_version": _package_version(),
        "config": cfg,
        "seed": int(cfg["seed"]),
        "metadata": report.metadata,
    }
    _write_json(cfg["out"] + ".meta.json", sidecar)
    print(cfg["out"])
    return 0


def cmd_simulate_rates(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _resolve(
        args,
        file_cfg,
        {
            "n_grid": None,
            "p": None,
            "reps": None,
            "seed": None,
            "rho": 0.5,
            "estimator": "mrc",
            "out": None,
        },
    )
    for key in ("n_grid", "p", "reps", "seed", "out"):
        if cfg[key] is None:
            raise ParseError(f"simulate rates requires --{key.replace('_', '-')}")
    n_grid = cfg["n_grid"]
    if isinstance(n_grid, str):
        n_grid = _parse_int_list(n_grid)
    cfg["n_grid"] = [int(n) for n in n_grid]

    report = run_rate_check(
        EstimatorSpec(kind=cfg["estimator"]),
        n_grid=cfg["n_grid"],
        p_fixed=int(cfg["p"]),
        reps=int(cfg["reps"]),
        seed=int(cfg["seed"]),
        rho=float(cfg["rho"]),
        threads=_threads(args),
    )
    header = ["record", "n", "value", "stderr"]
    rows = [["rmse", r.n, r.rmse, ""] for r in report.rows]
    rows.append(["slope", "", report.slope, _fmt_float(report.slope_se)])
    _atomic_write(cfg["out"], _csv_text(header, rows))
    sidecar = {
        "command": "simulate rates",
        "package_version": _package_version(),
        "config": cfg,
        "seed": int(cfg["seed"]),
        "metadata": report.metadata,
    }
    _write_json(cfg["out"] + ".meta.json", sidecar)
    print(cfg["out"])
    return 0


def cmd_density(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _resolve(args, file_cfg, {"samples": None, "out": None})
    if cfg["samples"] is None or cfg["out"] is None:
        raise ParseError("density requires --samples and --out")

    data = _read_sample_column(cfg["samples"])
    grid = FIGURE_GRID
    density = kde(data, grid)
    tests = normality_tests(data)

    header = ["grid", "density", "normal_ref"]
    reference = gaussian_kernel(grid)
    rows = [[g, d, ref] for g, d, ref in zip(grid, density, reference)]
    _atomic_write(cfg["out"], _csv_text(header, rows))
    sidecar = {
        "command": "density",
        "package_version": _package_version(),
        "config": {"samples": cfg["samples"], "out": cfg["out"], "grid": [-4.0, 4.0, 201]},
        "n_samples": int(data.shape[0]),
        "tests": {
            name: {"statistic": stat, "p_value": pval} for name, (stat, pval) in tests.items()
        },
    }
    _write_json(cfg["out"] + ".meta.json", sidecar)
    print(cfg["out"])
    return 0


# ---------------------------------------------------------------------------
# Parser assembly and entry point.
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankest",
        description="Rank-based single-index estimation and its Monte Carlo lab.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit one dataset from CSV")
    est.add_argument("--data", help="input CSV (header: y, x1..x{p+1}, optional r, v, w)")
    est.add_argument("--estimator", choices=["mrc", "cs", "kt", "as"], default=None)
    est.add_argument("--trim-lo", dest="trim_lo", type=float, default=None)
    est.add_argument("--trim-hi", dest="trim_hi", type=float, default=None)
    est.add_argument("--bandwidth-c", dest="bandwidth_c", type=float, default=None)
    est.add_argument("--bandwidth-delta", dest="bandwidth_delta", type=float, default=None)
    est.add_argument("--init", default=None, help="comma-separated initial theta")
    est.add_argument("--cov", action="store_true", default=None,
                     help="include the sandwich covariance in the output")
    est.add_argument("--epsilon", type=float, default=None)
    est.add_argument("--project", action="append", default=None,
                     help="comma-separated projection vector; repeatable")
    est.add_argument("--level", type=float, default=None)
    est.add_argument("--config", default=None, help="JSON config file; flags override")
    est.add_argument("--out", default=None)
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="run a Monte Carlo study")
    sim_sub = sim.add_subparsers(dest="study", required=True)

    cov = sim_sub.add_parser("coverage", help="CI coverage table")
    cov.add_argument("--n", type=int, default=None)
    cov.add_argument("--p", type=int, default=None)
    cov.add_argument("--reps", type=int, default=None)
    cov.add_argument("--seed", type=int, default=None)
    cov.add_argument("--levels", default=None, help="comma-separated nominal levels")
    cov.add_argument("--rho", type=float, default=None)
    cov.add_argument("--threads", type=int, default=None)
    cov.add_argument("--config", default=None)
    cov.add_argument("--out", default=None)
    cov.set_defaults(func=cmd_simulate_coverage)

    mae = sim_sub.add_parser("mae", help="covariance-step tuning scan")
    mae.add_argument("--grid", default=None, help='cells "n1:p1,n2:p2,..."')
    mae.add_argument("--multipliers", default=None, help="comma-separated step multipliers")
    mae.add_argument("--reps", type=int, default=None)
    mae.add_argument("--truth-reps", dest="truth_reps", type=int, default=None)
    mae.add_argument("--seed", type=int, default=None)
    mae.add_argument("--rho", type=float, default=None)
    mae.add_argument("--threads", type=int, default=None)
    mae.add_argument("--config", default=None)
    mae.add_argument("--out", default=None)
    mae.set_defaults(func=cmd_simulate_mae)

    rates = sim_sub.add_parser("rates", help="log-log RMSE rate check")
    rates.add_argument("--n-grid", dest="n_grid", default=None, help="comma-separated sizes")
    rates.add_argument("--p", type=int, default=None)
    rates.add_argument("--reps", type=int, default=None)
    rates.add_argument("--seed", type=int, default=None)
    rates.add_argument("--rho", type=float, default=None)
    rates.add_argument("--threads", type=int, default=None)
    rates.add_argument("--config", default=None)
    rates.add_argument("--out", default=None)
    rates.set_defaults(func=cmd_simulate_rates)

    den = sub.add_parser("density", help="KDE of a sample vs the normal reference")
    den.add_argument("--samples", default=None, help="one-column CSV")
    den.add_argument("--config", default=None)
    den.add_argument("--out", default=None)
    den.set_defaults(func=cmd_density)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SingularHessian as exc:
        print(f"error: SingularHessian: {exc}", file=sys.stderr)
        return 4
    except RankestError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
