"""Monte Carlo sweeps over noise levels, with CSV/JSON output.

Trial ``t`` draws its sensing matrix and signal from the stream
``(base_seed, t)``, so every grid point sees the same instances; any extra
channel randomness comes from ``(base_seed, key(g), t)`` where ``key(g)``
depends only on the grid value. Reordering or subsetting the grid therefore
leaves per-point results unchanged.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .measurement import (
    Combined,
    PostSignDense,
    PreSignDense,
    SparseCorruption,
    apply_channel,
    derive_seed,
    draw_sensing_matrix,
    draw_sparse_signal,
    make_rng,
)
from .recovery import powerlaw_signal, recover, recover_extended
from .solver import SolverOptions

__all__ = [
    "CHANNELS",
    "DEFAULT_GRIDS",
    "CSV_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "read_config",
    "TrialRecord",
    "GridSummary",
    "Summary",
    "noise_spec",
    "run_trial",
    "run_experiment",
    "summarize",
    "emit",
    "read_records",
]

CHANNELS = ("clean", "post", "pre", "corruption", "combined")

DEFAULT_GRIDS = {
    "clean": [0.0],
    "post": [round(0.04 * k, 2) for k in range(1, 11)],
    "pre": [round(0.04 + 0.08 * k, 2) for k in range(11)],
    "corruption": [1, 2, 3, 5, 7, 9, 11, 13],
    "combined": [0.05],
}

CSV_COLUMNS = (
    "grid_param", "trial", "seed", "l2_error", "residual_at_truth",
    "epsilon", "iterations", "converged", "wall_time_ms",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Sweep description. ``grid`` holds tau0 values, or zeta0*m for ``corruption``.

    ``zeta0m`` is the corruption budget used by the combined channel and by
    the extended estimator on non-corruption channels.
    """

    n: int = 500
    m: int = 300
    s: int = 5
    trials: int = 50
    base_seed: int = 0
    channel: str = "clean"
    grid: Optional[List[float]] = None
    zeta0m: float = 3
    epsilon_mode: str = "oracle"
    estimator: str = "standard"
    epsilon_constants: Optional[List[float]] = None
    signal: str = "sparse"
    powerlaw_q: float = 2.0
    fixed_matrix: bool = False
    solver: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("n", "m", "s", "trials", "workers"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.s > self.n:
            raise ConfigError("s must not exceed n")
        if not isinstance(self.base_seed, (int, np.integer)) or self.base_seed < 0:
            raise ConfigError("base_seed must be a non-negative integer")
        if self.channel not in CHANNELS:
            raise ConfigError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if self.epsilon_mode not in ("theorem", "oracle"):
            raise ConfigError("epsilon_mode must be 'theorem' or 'oracle'")
        if self.estimator not in ("standard", "extended"):
            raise ConfigError("estimator must be 'standard' or 'extended'")
        if self.signal not in ("sparse", "powerlaw"):
            raise ConfigError("signal must be 'sparse' or 'powerlaw'")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        if self.grid is None:
            self.grid = list(DEFAULT_GRIDS[self.channel])
        try:
            self.grid = [float(g) for g in self.grid]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid must be a list of numbers: {exc}") from None
        if not self.grid:
            raise ConfigError("grid must not be empty")
        if any(g < 0 for g in self.grid):
            raise ConfigError("grid values must be non-negative")
        if self.channel == "post" and max(self.grid) > math.sqrt(2):
            raise ConfigError("post-sign tau0 must not exceed sqrt(2)")
        if self.channel == "corruption" and max(self.grid) > self.m:
            raise ConfigError("zeta0*m must not exceed m")
        if self.epsilon_constants is not None and len(self.epsilon_constants) != 3:
            raise ConfigError("epsilon_constants needs three values (C1, C2, C3)")
        try:
            self.solver_options()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid solver options: {exc}") from None

    def solver_options(self) -> SolverOptions:
        return SolverOptions(**self.solver)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(read_config(path))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def read_config(path) -> dict:
    """Parse a JSON config file; keys are validated, omitted fields stay absent."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    ExperimentConfig.from_dict(data)
    return data


@dataclass
class TrialRecord:
    grid_param: float
    trial: int
    seed: int
    l2_error: float
    residual_at_truth: float
    epsilon: float
    iterations: int
    converged: bool
    wall_time_ms: float


def noise_spec(cfg: ExperimentConfig, g: float):
    """Channel description for grid value ``g``."""
    if cfg.channel == "clean":
        return None
    if cfg.channel == "post":
        return PostSignDense(g)
    if cfg.channel == "pre":
        return PreSignDense(g)
    if cfg.channel == "corruption":
        return SparseCorruption(g / cfg.m)
    return Combined(g, cfg.zeta0m / cfg.m)


def _grid_key(g: float) -> int:
    return zlib.crc32(repr(float(g)).encode())


def _instance(cfg: ExperimentConfig, t: int):
    seed = derive_seed(cfg.base_seed, t)
    rng = make_rng(cfg.base_seed, t)
    mseed = derive_seed(cfg.base_seed, 2**31) if cfg.fixed_matrix else derive_seed(seed)
    phi = draw_sensing_matrix(cfg.m, cfg.n, mseed)
    if cfg.signal == "sparse":
        x = draw_sparse_signal(cfg.n, cfg.s, rng)
    else:
        x = powerlaw_signal(cfg.n, cfg.powerlaw_q, rng)
    return seed, phi, x


def run_trial(cfg: ExperimentConfig, g: float, t: int) -> TrialRecord:
    """One (grid point, trial) cell; solver faults are recorded, not raised."""
    seed, phi, x = _instance(cfg, t)
    spec = noise_spec(cfg, g)
    start = time.perf_counter()
    try:
        z_breve = apply_channel(phi, x, spec, rng=make_rng(cfg.base_seed, _grid_key(g), t))
        opts = cfg.solver_options()
        if cfg.estimator == "extended":
            budget = g if cfg.channel == "corruption" else cfg.zeta0m
            res = recover_extended(phi, z_breve, cfg.s, budget / cfg.m, opts, x=x)
        else:
            res = recover(
                phi, z_breve, spec, opts, epsilon_mode=cfg.epsilon_mode, x=x, s=cfg.s,
                constants=cfg.epsilon_constants,
            )
        rec = TrialRecord(
            grid_param=float(g), trial=t, seed=seed, l2_error=float(res.l2_error),
            residual_at_truth=float(res.residual_at_truth), epsilon=float(res.epsilon_used),
            iterations=int(res.solve.iterations), converged=bool(res.solve.converged),
            wall_time_ms=0.0,
        )
    except (ValueError, np.linalg.LinAlgError, FloatingPointError):
        rec = TrialRecord(float(g), t, seed, math.nan, math.nan, math.nan, 0, False, 0.0)
    rec.wall_time_ms = round((time.perf_counter() - start) * 1000.0, 3)
    return rec


def _run_cell(args):
    cfg, g, t = args
    return run_trial(cfg, g, t)


def run_experiment(cfg: ExperimentConfig, progress=None) -> List[TrialRecord]:
    """All (grid point, trial) records, sorted by (grid position, trial)."""
    cells = [(cfg, g, t) for g in cfg.grid for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_cell, cells, chunksize=4))
    else:
        records = []
        for i, cell in enumerate(cells):
            records.append(_run_cell(cell))
            if progress is not None:
                progress(i + 1, len(cells))
    order = {g: i for i, g in enumerate(cfg.grid)}
    records.sort(key=lambda r: (order[r.grid_param], r.trial))
    return records


# ----------------------------------------------------------------------------
# Summaries


@dataclass
class GridSummary:
    grid_param: float
    count: int
    mean: float
    median: float
    std: float
    failures: int


@dataclass
class Summary:
    points: List[GridSummary]
    loglog_slope: Optional[float] = None
    linear_slope: Optional[float] = None
    linear_intercept: Optional[float] = None
    linear_r2: Optional[float] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _fit(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def summarize(records: Sequence[TrialRecord], loglog: bool = True) -> Summary:
    """Per-grid-point error statistics plus linear and log-log fits of the mean.

    The log-log slope regresses ``log(mean error)`` on ``log(grid value)``;
    points with non-positive values are skipped, and with fewer than two
    usable points the fits are omitted.
    """
    if not records:
        raise ValueError("no records to summarize")
    groups: dict = {}
    for r in records:
        groups.setdefault(r.grid_param, []).append(r)
    points = []
    for g, rs in groups.items():
        errs = np.array([r.l2_error for r in rs], dtype=float)
        ok = errs[np.isfinite(errs)]
        points.append(GridSummary(
            grid_param=float(g), count=len(rs),
            mean=float(ok.mean()) if ok.size else math.nan,
            median=float(np.median(ok)) if ok.size else math.nan,
            std=float(ok.std()) if ok.size else math.nan,
            failures=sum(1 for r in rs if not r.converged),
        ))
    summary = Summary(points)
    usable = [p for p in points if math.isfinite(p.mean)]
    if len(usable) >= 2:
        summary.linear_slope, summary.linear_intercept, summary.linear_r2 = _fit(
            [p.grid_param for p in usable], [p.mean for p in usable]
        )
        if loglog:
            pos = [p for p in usable if p.grid_param > 0 and p.mean > 0]
            if len(pos) >= 2:
                summary.loglog_slope = _fit(
                    np.log([p.grid_param for p in pos]), np.log([p.mean for p in pos])
                )[0]
    return summary


# ----------------------------------------------------------------------------
# Output


def _row(r: TrialRecord) -> list:
    return [repr(float(r.grid_param)), r.trial, r.seed, repr(float(r.l2_error)),
            repr(float(r.residual_at_truth)), repr(float(r.epsilon)), r.iterations,
            int(r.converged), repr(float(r.wall_time_ms))]


def emit(
    records: Sequence[TrialRecord],
    summary: Optional[Summary],
    path,
    format: str = "csv",
    config: Optional[ExperimentConfig] = None,
) -> Path:
    """Write records as CSV (fixed columns) or JSON (metadata header, records, summary)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if format == "csv":
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_COLUMNS)
                for r in records:
                    w.writerow(_row(r))
        elif format == "json":
            doc = {
                "metadata": {
                    "artifact": "phaseonly",
                    "version": __version__,
                    "timestamp": datetime.now(timezone.utc).isoformat(),
                    "config": None if config is None else config.to_dict(),
                },
                "records": [dataclasses.asdict(r) for r in records],
                "summary": None if summary is None else summary.to_dict(),
            }
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=1, allow_nan=True)
                fh.write("\n")
        else:
            raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from exc
    return path


def _parse_csv_row(row: dict) -> TrialRecord:
    return TrialRecord(
        grid_param=float(row["grid_param"]), trial=int(row["trial"]), seed=int(row["seed"]),
        l2_error=float(row["l2_error"]), residual_at_truth=float(row["residual_at_truth"]),
        epsilon=float(row["epsilon"]), iterations=int(row["iterations"]),
        converged=bool(int(row["converged"])), wall_time_ms=float(row["wall_time_ms"]),
    )


def read_records(path) -> List[TrialRecord]:
    """Parse records written by :func:`emit` (format chosen by file suffix)."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path) as fh:
            doc = json.load(fh)
        return [TrialRecord(**r) for r in doc["records"]]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return [_parse_csv_row(row) for row in reader]


def format_summary(summary: Summary, label: str = "param") -> str:
    lines = [f"{label:>10} {'n':>4} {'mean':>12} {'median':>12} {'std':>12} {'fail':>5}"]
    for p in summary.points:
        lines.append(f"{p.grid_param:>10.4g} {p.count:>4d} {p.mean:>12.4e} "
                     f"{p.median:>12.4e} {p.std:>12.4e} {p.failures:>5d}")
    if summary.linear_r2 is not None:
        lines.append(f"linear fit: slope={summary.linear_slope:.4g} "
                     f"intercept={summary.linear_intercept:.4g} R2={summary.linear_r2:.4f}")
    if summary.loglog_slope is not None:
        lines.append(f"log-log slope: {summary.loglog_slope:.4f}")
    return "\n".join(lines)


def iter_grid(values: Iterable) -> List[float]:
    return [float(v) for v in values]
