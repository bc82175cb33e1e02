"""Experiment runner: JSON configuration, seeded multi-trial sweeps over
system sizes and power budgets, runtime measurement, CSV/JSON emission.

A configuration plus its base seed fully determines every non-timing output
column: trial t always uses channel seed base_seed + t, independently of the
other trials.  Runtimes wrap the solve call only (channel generation is
excluded) on the monotonic clock, with one discarded warm-up solve per sweep
point.
"""

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .channel import (DEFAULT_NOISE_DBM, FadingConfig, Geometry,
                      dbm_to_watts, generate_channels)
from .objective import PowerBudget
from .solver import Solution, SolverConfig, bsum_solve

CSV_HEADER = ("trial", "M", "N", "K", "p_max_dbm", "sum_rate_bits",
              "iterations", "runtime_ms", "converged", "residual_max")


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment description; every field has a default.

    `dims` lists the (M, N) sweep points and `p_max_dbm` the total power
    budgets; each combination is run `trials` times.  The total budget is
    split as (fraction to the RIS, fraction to the BS) = `power_split`.
    """

    dims: tuple[tuple[int, int], ...] = ((64, 32),)
    users: int = 8
    p_max_dbm: tuple[float, ...] = (30.0,)
    power_split: tuple[float, float] = (0.01, 0.99)
    trials: int = 20
    base_seed: int = 0
    eta: float = 8.0
    noise_dbm: float = DEFAULT_NOISE_DBM
    per_antenna: bool = False
    warmup: bool = True
    blas_threads: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)
    geometry: Geometry = field(default_factory=Geometry)
    fading: FadingConfig = field(default_factory=FadingConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.blas_threads < 1:
            raise ConfigError("blas_threads must be at least 1")
        if abs(sum(self.power_split) - 1.0) > 1e-9:
            raise ConfigError("power_split fractions must sum to 1")
        if any(f <= 0.0 for f in self.power_split):
            raise ConfigError("power_split fractions must be positive")
        for m, n in self.dims:
            if m < 1 or n < 1:
                raise ConfigError(f"invalid sweep dims ({m}, {n})")
        if self.eta <= 0.0:
            raise ConfigError("eta must be positive")
        if self.geometry.num_users != self.users:
            raise ConfigError("geometry.num_users must equal users")


@dataclass(frozen=True)
class ResultRow:
    trial: int
    M: int
    N: int
    K: int
    p_max_dbm: float
    sum_rate_bits: float
    iterations: int
    runtime_ms: float
    converged: bool
    residual_max: float


_SOLVER_KEYS = {"mu0", "mu_growth", "mu_max", "tol", "max_iters",
                "stop_per_user"}
_GEOMETRY_KEYS = {"bs_position", "ris_position", "user_radius"}
_FADING_KEYS = {"rician_factor", "pathloss_bs_user", "pathloss_ris_links"}
_TOP_KEYS = {"dims", "users", "p_max_dbm", "power_split", "trials",
             "base_seed", "eta", "noise_dbm", "per_antenna", "warmup",
             "blas_threads", "solver", "geometry", "fading"}


def _check_keys(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} field(s): {sorted(unknown)}")


def load_config(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file path or an already-parsed
    dict.  Unknown fields anywhere are rejected."""
    if isinstance(source, dict):
        raw = source
    else:
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")

    solver_raw = dict(raw.get("solver", {}))
    _check_keys(solver_raw, _SOLVER_KEYS, "solver")
    geometry_raw = dict(raw.get("geometry", {}))
    _check_keys(geometry_raw, _GEOMETRY_KEYS, "geometry")
    fading_raw = dict(raw.get("fading", {}))
    _check_keys(fading_raw, _FADING_KEYS, "fading")

    users = int(raw.get("users", 8))
    try:
        for key in ("bs_position", "ris_position"):
            if key in geometry_raw:
                geometry_raw[key] = tuple(float(v) for v in geometry_raw[key])
        for key in ("pathloss_bs_user", "pathloss_ris_links"):
            if key in fading_raw:
                fading_raw[key] = tuple(float(v) for v in fading_raw[key])
        geometry = Geometry(num_users=users, **geometry_raw)
        fading = FadingConfig(**fading_raw)
        solver = SolverConfig(**solver_raw)
        return ExperimentConfig(
            dims=tuple((int(m), int(n)) for m, n in raw.get("dims", [(64, 32)])),
            users=users,
            p_max_dbm=tuple(float(p) for p in raw.get("p_max_dbm", [30.0])),
            power_split=tuple(float(f) for f in raw.get("power_split", (0.01, 0.99))),
            trials=int(raw.get("trials", 20)),
            base_seed=int(raw.get("base_seed", 0)),
            eta=float(raw.get("eta", 8.0)),
            noise_dbm=float(raw.get("noise_dbm", DEFAULT_NOISE_DBM)),
            per_antenna=bool(raw.get("per_antenna", False)),
            warmup=bool(raw.get("warmup", True)),
            blas_threads=int(raw.get("blas_threads", 1)),
            solver=solver,
            geometry=geometry,
            fading=fading,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config value: {exc}") from exc


def resolved_config_dict(cfg: ExperimentConfig) -> dict:
    """Config as a JSON-serializable dict, defaults included."""
    out = dataclasses.asdict(cfg)
    out["dims"] = [list(d) for d in cfg.dims]
    out["p_max_dbm"] = list(cfg.p_max_dbm)
    out["power_split"] = list(cfg.power_split)
    out["geometry"]["bs_position"] = list(cfg.geometry.bs_position)
    out["geometry"]["ris_position"] = list(cfg.geometry.ris_position)
    out["fading"]["pathloss_bs_user"] = list(cfg.fading.pathloss_bs_user)
    out["fading"]["pathloss_ris_links"] = list(cfg.fading.pathloss_ris_links)
    return out


def _budget_for(cfg: ExperimentConfig, p_max_dbm: float, n: int) -> PowerBudget:
    p_max = dbm_to_watts(p_max_dbm)
    frac_ris, frac_bs = cfg.power_split
    return PowerBudget(p_bs=frac_bs * p_max, p_ris=frac_ris * p_max,
                       eta=np.full(n, cfg.eta), per_antenna=cfg.per_antenna)


def _solve_trial(cfg: ExperimentConfig, dims: tuple[int, int],
                 p_max_dbm: float, trial: int) -> tuple[Solution, float]:
    seed = cfg.base_seed + trial
    ch = generate_channels(cfg.geometry, replace(cfg.fading, seed=seed),
                           dims, noise_dbm=cfg.noise_dbm)
    budget = _budget_for(cfg, p_max_dbm, dims[1])
    solver_cfg = replace(cfg.solver, seed=seed, per_antenna=cfg.per_antenna)
    tic = time.perf_counter()
    sol = bsum_solve(ch, budget, solver_cfg)
    return sol, (time.perf_counter() - tic) * 1e3


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ResultRow], list[dict]]:
    """Run every (sweep point x trial) solve; returns the rows, ordered by
    (declared sweep point, trial), and per-sweep-point mean/std summaries.
    Dense linear algebra runs with the pinned `blas_threads` so timings are
    comparable and outputs deterministic."""
    rows: list[ResultRow] = []
    summary: list[dict] = []
    with threadpool_limits(limits=cfg.blas_threads):
        for dims in cfg.dims:
            m, n = dims
            for p_dbm in cfg.p_max_dbm:
                if cfg.warmup:
                    _solve_trial(cfg, dims, p_dbm, 0)
                point_rows = []
                for trial in range(cfg.trials):
                    sol, runtime_ms = _solve_trial(cfg, dims, p_dbm, trial)
                    point_rows.append(ResultRow(
                        trial=trial, M=m, N=n, K=cfg.users, p_max_dbm=p_dbm,
                        sum_rate_bits=sol.sum_rate, iterations=sol.iterations,
                        runtime_ms=runtime_ms, converged=sol.converged,
                        residual_max=sol.residuals.max_normalized))
                rows.extend(point_rows)
                rates = np.array([r.sum_rate_bits for r in point_rows])
                times = np.array([r.runtime_ms for r in point_rows])
                iters = np.array([r.iterations for r in point_rows])
                summary.append({
                    "M": m, "N": n, "K": cfg.users, "p_max_dbm": p_dbm,
                    "trials": cfg.trials,
                    "sum_rate_mean": float(rates.mean()),
                    "sum_rate_std": float(rates.std()),
                    "runtime_ms_mean": float(times.mean()),
                    "runtime_ms_std": float(times.std()),
                    "iterations_mean": float(iters.mean()),
                    "converged_frac": float(np.mean(
                        [r.converged for r in point_rows])),
                })
    return rows, summary


def sweep_sizes(cfg: ExperimentConfig) -> list[dict]:
    """Mean runtime per configured (M, N) point, typically with one of the
    two sizes held fixed.  Uses the first entry of p_max_dbm; one warm-up
    solve per point is excluded from the averages."""
    if not cfg.dims:
        raise ConfigError("dims sweep list is empty")
    if not cfg.p_max_dbm:
        raise ConfigError("p_max_dbm list is empty")
    p_dbm = cfg.p_max_dbm[0]
    table = []
    with threadpool_limits(limits=cfg.blas_threads):
        for dims in cfg.dims:
            if cfg.warmup:
                _solve_trial(cfg, dims, p_dbm, 0)
            runtimes = []
            per_iter = []
            iters = []
            for trial in range(cfg.trials):
                sol, runtime_ms = _solve_trial(cfg, dims, p_dbm, trial)
                runtimes.append(runtime_ms)
                iters.append(sol.iterations)
                per_iter.append(runtime_ms / max(sol.iterations, 1))
            table.append({
                "M": dims[0], "N": dims[1], "K": cfg.users,
                "p_max_dbm": p_dbm, "trials": cfg.trials,
                "runtime_ms_mean": float(np.mean(runtimes)),
                "runtime_ms_std": float(np.std(runtimes)),
                "iterations_mean": float(np.mean(iters)),
                "per_iteration_ms_mean": float(np.mean(per_iter)),
            })
    return table


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(rows: list[ResultRow], fmt: str, path: str,
         config: ExperimentConfig | None = None,
         summary: list[dict] | None = None) -> None:
    """Write results as CSV (fixed header) or JSON (rows plus the resolved
    config for provenance)."""
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow([_cell(getattr(row, name))
                                 for name in CSV_HEADER])
    elif fmt == "json":
        doc = {"rows": [dataclasses.asdict(r) for r in rows]}
        if config is not None:
            doc["config"] = resolved_config_dict(config)
        if summary is not None:
            doc["summary"] = summary
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def parse_csv(path: str) -> list[ResultRow]:
    """Read back a CSV written by :func:`emit`."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ResultRow(
                trial=int(rec["trial"]), M=int(rec["M"]), N=int(rec["N"]),
                K=int(rec["K"]), p_max_dbm=float(rec["p_max_dbm"]),
                sum_rate_bits=float(rec["sum_rate_bits"]),
                iterations=int(rec["iterations"]),
                runtime_ms=float(rec["runtime_ms"]),
                converged=rec["converged"] == "True",
                residual_max=float(rec["residual_max"])))
    return rows
