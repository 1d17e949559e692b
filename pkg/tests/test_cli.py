from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pbe.cli import main


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _read(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_run_pure_fragmentation(tmp_path):
    cfg = _write(tmp_path, "kernel = none\nalpha = -0.5\nmesh.cells = 60\ntime.T = 2\noutput.times = 0.5, 1\n")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    head, data = _read(out / "moments.csv")
    assert head == ["t", "mu0", "mu1", "mu2", "leakage"]
    mu1 = data[:, 2]
    assert np.max(np.abs(mu1 - mu1[0])) / mu1[0] <= 1e-10
    assert sorted(p.name for p in out.iterdir()) == [
        "density_t0.5.csv",
        "density_t1.csv",
        "density_t2.csv",
        "moments.csv",
    ]
    head, dens = _read(out / "density_t2.csv")
    assert head == ["x_center", "dx", "c"] and dens.shape == (60, 3)


def test_run_outputs_are_byte_identical(tmp_path):
    cfg = _write(tmp_path, "mesh.cells = 40\ntime.T = 1\noutput.times = 0.5\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b")]) == 0
    for name in ("moments.csv", "density_t0.5.csv", "density_t1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_full_precision_csv(tmp_path):
    cfg = _write(tmp_path, "mesh.cells = 10\ntime.T = 0\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, dens = _read(tmp_path / "o" / "density_t0.csv")
    from pbe.config import parse_config
    from pbe.solver import project_initial

    c = parse_config(cfg)
    exact = project_initial(c.initial_density(), c.mesh()).c
    assert np.array_equal(dens[:, 2], exact)


def test_eoc_command(tmp_path, capsys):
    cfg = _write(tmp_path, "time.T = 1\n")
    out = tmp_path / "e"
    assert main(["eoc", str(cfg), "--grids", "10,20,40", "--out", str(out)]) == 0
    lines = (out / "eoc.csv").read_text().splitlines()
    assert lines[0] == "cells,N,error,eoc" and len(lines) == 4
    assert json.loads((out / "eoc.json").read_text())["cells"] == [10, 20, 40]
    assert "cells" in capsys.readouterr().out


def test_validate_default_config(tmp_path, capsys):
    cfg = _write(tmp_path, "kernel = sum\n")
    assert main(["validate", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 6 and "FAIL" not in out


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "alpha = -1.5\n")
    assert main(["run", str(cfg)]) == 2
    assert "(-1, 0]" in capsys.readouterr().err


def test_bad_grids_exit_code(tmp_path):
    cfg = _write(tmp_path, "time.T = 1\n")
    assert main(["eoc", str(cfg), "--grids", "10,30,60"]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_solver_abort_leaves_no_partial_output(tmp_path, capsys):
    cfg = _write(tmp_path, "mesh.cells = 30\ntime.T = 10\ntime.max_steps = 3\n")
    out = tmp_path / "o"
    assert main(["run", str(cfg), "--out", str(out)]) == 1
    assert "StepLimitExceeded" in capsys.readouterr().err
    assert not out.exists() or list(out.iterdir()) == []


def test_flag_overrides(tmp_path):
    cfg = _write(tmp_path, "mesh.cells = 30\ntime.T = 5\noutput.times = 1, 4\n")
    out = tmp_path / "o"
    assert main(["run", str(cfg), "--T", "2", "--cells", "20", "--theta", "0.3", "--dt", "0.01", "--out", str(out)]) == 0
    _, data = _read(out / "moments.csv")
    assert data[-1, 0] == 2.0
    assert (out / "density_t1.csv").exists() and not (out / "density_t4.csv").exists()
    _, dens = _read(out / "density_t2.csv")
    assert dens.shape[0] == 20


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, "time.T = 0\nmesh.cells = 4\n")
    proc = subprocess.run(
        [sys.executable, "-m", "pbe", "run", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
