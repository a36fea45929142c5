import json
import math

import numpy as np
import pytest

from phaseonly.experiment import (
    CSV_COLUMNS,
    DEFAULT_GRIDS,
    ConfigError,
    ExperimentConfig,
    TrialRecord,
    emit,
    read_records,
    run_experiment,
    summarize,
)

SMALL = dict(n=60, m=50, s=2, trials=3)


def _records(errs_by_grid):
    out = []
    for g, errs in errs_by_grid.items():
        for t, e in enumerate(errs):
            out.append(TrialRecord(g, t, t, e, 0.1, 0.1, 10, True, 1.0))
    return out


def test_defaults_match_full_scale():
    cfg = ExperimentConfig()
    assert (cfg.n, cfg.m, cfg.s, cfg.trials) == (500, 300, 5, 50)


def test_default_grids():
    assert DEFAULT_GRIDS["post"] == pytest.approx([0.04 * k for k in range(1, 11)])
    assert len(DEFAULT_GRIDS["post"]) == 10
    assert DEFAULT_GRIDS["pre"][0] == 0.04 and DEFAULT_GRIDS["pre"][-1] == 0.84
    assert len(DEFAULT_GRIDS["pre"]) == 11
    assert DEFAULT_GRIDS["corruption"] == [1, 2, 3, 5, 7, 9, 11, 13]


@pytest.mark.parametrize("bad", [
    dict(n=0), dict(trials=-1), dict(s=100, n=10), dict(channel="fog"),
    dict(epsilon_mode="magic"), dict(estimator="x"), dict(grid=[]), dict(grid=[-1]),
    dict(channel="post", grid=[2.0]), dict(solver={"rho": -1}), dict(solver={"nope": 1}),
    dict(base_seed=-3), dict(epsilon_constants=[1, 2]),
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_config_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"n": 40, "channel": "post", "grid": [0.1]}))
    cfg = ExperimentConfig.from_json(p)
    assert cfg.n == 40 and cfg.grid == [0.1]
    p.write_text(json.dumps({"n": 40, "colour": "red"}))
    with pytest.raises(ConfigError, match="colour"):
        ExperimentConfig.from_json(p)
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(p)


def test_run_shape_and_order():
    cfg = ExperimentConfig(channel="post", grid=[0.2, 0.04], **SMALL)
    recs = run_experiment(cfg)
    assert [(r.grid_param, r.trial) for r in recs] == [
        (0.2, 0), (0.2, 1), (0.2, 2), (0.04, 0), (0.04, 1), (0.04, 2)]
    assert all(0 <= r.l2_error <= 2 for r in recs)


def test_reproducible():
    cfg = ExperimentConfig(channel="combined", grid=[0.05], zeta0m=2, epsilon_mode="theorem", **SMALL)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    strip = lambda rs: [(r.grid_param, r.trial, r.seed, r.l2_error, r.epsilon, r.iterations) for r in rs]
    assert strip(a) == strip(b)


def test_grid_independence():
    a = run_experiment(ExperimentConfig(channel="pre", grid=[0.1, 0.5], **SMALL))
    b = run_experiment(ExperimentConfig(channel="pre", grid=[0.5], **SMALL))
    pick = [r.l2_error for r in a if r.grid_param == 0.5]
    assert pick == [r.l2_error for r in b]


def test_fixed_matrix_option():
    a = run_experiment(ExperimentConfig(channel="clean", fixed_matrix=True, **SMALL))
    assert len(a) == 3 and all(r.l2_error <= 1e-5 for r in a)


def test_solver_failures_recorded_not_raised():
    cfg = ExperimentConfig(channel="post", grid=[0.3], solver={"max_iter": 5}, **SMALL)
    recs = run_experiment(cfg)
    assert len(recs) == 3
    assert not any(r.converged for r in recs)


def test_extended_estimator_run():
    cfg = ExperimentConfig(channel="corruption", grid=[1], estimator="extended",
                           n=100, m=80, s=2, trials=2)
    recs = run_experiment(cfg)
    assert all(r.l2_error <= 1e-5 for r in recs)


def test_summary_stats_and_slopes():
    s = summarize(_records({1.0: [0.2, 0.4, 0.6], 4.0: [0.2, 0.4, 0.6]}))
    assert s.points[0].mean == pytest.approx(0.4)
    assert s.points[0].median == pytest.approx(0.4)
    assert s.points[0].std == pytest.approx(np.std([0.2, 0.4, 0.6]))
    assert s.loglog_slope == pytest.approx(0.0, abs=1e-12)
    z = [1, 2, 3, 5, 7, 9, 11, 13]
    s = summarize(_records({g: [0.01 * math.sqrt(g)] for g in z}))
    assert s.loglog_slope == pytest.approx(0.5, abs=1e-10)
    s = summarize(_records({0.1: [0.3], 0.2: [0.5], 0.3: [0.7]}))
    assert s.linear_slope == pytest.approx(2.0) and s.linear_r2 == pytest.approx(1.0)


def test_summary_single_point_and_empty():
    s = summarize(_records({1.0: [0.1, 0.2]}))
    assert s.loglog_slope is None and s.linear_r2 is None
    with pytest.raises(ValueError):
        summarize([])


def test_csv_round_trip(tmp_path):
    recs = run_experiment(ExperimentConfig(channel="post", grid=[0.1], **SMALL))
    p = emit(recs, summarize(recs), tmp_path / "out.csv", "csv")
    assert p.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_records(p) == recs


def test_json_round_trip(tmp_path):
    cfg = ExperimentConfig(channel="post", grid=[0.1], **SMALL)
    recs = run_experiment(cfg)
    p = emit(recs, summarize(recs), tmp_path / "out.json", "json", cfg)
    doc = json.loads(p.read_text())
    assert doc["metadata"]["config"]["channel"] == "post"
    assert "version" in doc["metadata"] and "timestamp" in doc["metadata"]
    assert read_records(p) == recs


def test_csv_deterministic_bytes(tmp_path):
    cfg = ExperimentConfig(channel="pre", grid=[0.2], **SMALL)
    a, b = run_experiment(cfg), run_experiment(cfg)
    for r in a + b:
        r.wall_time_ms = 0.0  # timing is the only nondeterministic column
    pa = emit(a, None, tmp_path / "a.csv")
    pb = emit(b, None, tmp_path / "b.csv")
    assert pa.read_bytes() == pb.read_bytes()


def test_empty_records_header_only(tmp_path):
    p = emit([], None, tmp_path / "e.csv")
    assert p.read_text() == ",".join(CSV_COLUMNS) + "\n"
    assert read_records(p) == []


def test_emit_io_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit([], None, blocker / "sub" / "out.csv")


def test_nan_records_survive_round_trip(tmp_path):
    recs = [TrialRecord(1.0, 0, 5, math.nan, math.nan, math.nan, 0, False, 2.0)]
    back = read_records(emit(recs, None, tmp_path / "n.csv"))
    assert math.isnan(back[0].l2_error) and not back[0].converged
