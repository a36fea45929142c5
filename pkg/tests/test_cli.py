import json
import subprocess
import sys

import numpy as np
import pytest

from phaseonly.cli import main
from phaseonly.experiment import CSV_COLUMNS, read_records
from phaseonly.measurement import (
    apply_sparse_corruption,
    draw_sensing_matrix,
    draw_sparse_signal,
    make_rng,
    observe,
)

SMALL = ["--n", "60", "--m", "50", "--s", "2", "--trials", "2"]


def test_experiment_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    rc = main(["experiment", *SMALL, "--channel", "post", "--tau0-grid", "0.04,0.08",
               "--out", str(out)])
    assert rc == 0
    recs = read_records(out)
    assert len(recs) == 4
    assert out.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert "mean" in capsys.readouterr().out


def test_experiment_json_from_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 60, "m": 50, "s": 2, "trials": 2, "channel": "corruption",
                               "grid": [1, 2]}))
    out = tmp_path / "r.json"
    assert main(["experiment", "--config", str(cfg), "--trials", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["metadata"]["config"]["trials"] == 1
    assert len(doc["records"]) == 2
    assert doc["summary"]["loglog_slope"] is not None


def test_zeta0m_grid_for_corruption(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["experiment", *SMALL, "--channel", "corruption", "--zeta0m-grid", "1,3",
                 "--estimator", "extended", "--out", str(out)]) == 0
    assert sorted({r.grid_param for r in read_records(out)}) == [1.0, 3.0]


def test_config_errors(tmp_path):
    assert main(["experiment", "--channel", "nope"]) == 1
    assert main(["experiment", "--n", "0"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 5, "extra": 1}')
    assert main(["experiment", "--config", str(bad)]) == 1
    assert main(["experiment", *SMALL, "--channel", "post", "--zeta0m-grid", "1,2"]) == 1
    assert main([]) == 1


def test_io_errors(tmp_path):
    assert main(["experiment", "--config", str(tmp_path / "missing.json")]) == 2
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["experiment", *SMALL, "--out", str(blocker / "x.csv")]) == 2
    assert main(["recover", str(tmp_path / "missing.npz")]) == 2


def test_recover_subcommand(tmp_path, capsys):
    phi = draw_sensing_matrix(120, 150, 3)
    x = draw_sparse_signal(150, 3, make_rng(3))
    zb = apply_sparse_corruption(phi, x, observe(phi, x), 2 / 120)
    path = tmp_path / "inst.npz"
    np.savez(path, Phi=phi.entries, z=zb.values, x=x)
    out = tmp_path / "est"
    rc = main(["recover", str(path), "--estimator", "extended", "--s", "3", "--zeta0m", "2",
               "--out", str(out)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["l2_error"] <= 1e-5
    np.testing.assert_allclose(np.load(tmp_path / "est.npy"), x, atol=1e-5)
    np.savez(tmp_path / "bad.npz", Phi=phi.entries)
    assert main(["recover", str(tmp_path / "bad.npz")]) == 1


def test_recover_solver_fault_exit(tmp_path, monkeypatch):
    phi = draw_sensing_matrix(20, 10, 1)
    x = draw_sparse_signal(10, 2, make_rng(1))
    path = tmp_path / "inst.npz"
    np.savez(path, Phi=phi.entries, z=observe(phi, x).values)

    import phaseonly.cli as cli

    def boom(*a, **k):
        raise np.linalg.LinAlgError("not positive definite")

    monkeypatch.setattr(cli, "recover", boom)
    assert main(["recover", str(path)]) == 3


def test_rip_check(capsys):
    assert main(["rip-check", "--n", "12", "--m", "30", "--t", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["certified"] and out["method"] == "exhaustive"
    assert main(["rip-check", "--n", "200", "--m", "100", "--t", "5", "--samples", "200"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert not out["certified"]
    assert main(["rip-check", "--n", "8", "--m", "10", "--t", "1", "--extended", "1", "--s", "2"]) == 0


def test_adversary(capsys):
    assert main(["adversary", "--mode", "pre"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["feasible"] and out["measurement_gap_inf"] <= 0.1
    assert main(["adversary", "--mode", "post"]) == 0
    out = json.loads(capsys.readouterr().out)
    if out["feasible"]:
        assert out["phase_gap_inf"] <= 0.1


def test_selftest_quick(capsys):
    assert main(["selftest", "--quick"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(l.startswith("PASS") for l in lines)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "phaseonly", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "phaseonly" in res.stdout
