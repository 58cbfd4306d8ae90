import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from kblab.cli import main
from kblab.collision import VelocityGrid
from kblab.io import FieldFile
from kblab.lp import FourierGrid, SpectralField

SMALL = {"version": "1", "grids": {"points_per_axis": 16, "velocity": {"half_width": 4.55, "points_per_axis": 7}},
         "kernel": {"gamma_order": 1},
         "solver": {"dt": 0.01, "T": 0.05, "amplitude": 0.01, "k_max": 2.0, "gamma_rtol": 1e-6}}


def write_config(tmp_path, name="c.json", **sections):
    cfg = json.loads(json.dumps(SMALL))
    for key, val in sections.items():
        cfg[key] = {**cfg.get(key, {}), **val} if isinstance(val, dict) else val
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run(*argv):
    return main([str(a) for a in argv])


# simulate -------------------------------------------------------------------------
def test_simulate_zero_amplitude(tmp_path):
    cfg = write_config(tmp_path, solver={"amplitude": 0.0})
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "diagnostics.csv")
    assert len(rows) == 6
    for row in rows:
        for key in ("energy", "E", "D", "D_tilde", "Y", "Y_tilde", "mass", "norm_a", "res_theta"):
            assert float(row[key]) == 0.0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["status"] == "ok" and man["steps"] == 5 and "diagnostics.csv" in man["artifacts"]


def test_simulate_reproducible_across_threads(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    outs = []
    for i, threads in enumerate(("1", "2", "1")):
        monkeypatch.setenv("KB_THREADS", threads)
        out = tmp_path / f"o{i}"
        assert run("simulate", "--config", cfg, "--out", out) == 0
        outs.append(((out / "diagnostics.csv").read_bytes(), (out / "manifest.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_simulate_seed_override(tmp_path):
    cfg = write_config(tmp_path)
    run("simulate", "--config", cfg, "--out", tmp_path / "a")
    run("simulate", "--config", cfg, "--out", tmp_path / "b", "--seed", 5)
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert b["seed"] == 5 and a["config_hash"] != b["config_hash"]
    assert a["artifacts"]["diagnostics.csv"] != b["artifacts"]["diagnostics.csv"]


def test_simulate_divergence_exit(tmp_path):
    cfg = write_config(tmp_path, solver={"amplitude": 100.0, "blowup": 10.0, "T": 0.2, "k_max": 2.0})
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 3
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["status"] == "diverged" and man["last_good_step"] >= 0


def test_simulate_picard(tmp_path):
    cfg = write_config(tmp_path, solver={"method": "picard", "picard_max": 2})
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "picard.csv")
    assert [r["sweep"] for r in rows] == ["1", "2"]


def test_invalid_inputs_exit_2(tmp_path, monkeypatch, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"version": "1", "solver": {"dt": 0.3}}))
    assert run("simulate", "--config", bad) == 2
    assert run("simulate", "--config", tmp_path / "missing.json") == 2
    assert run("verify", "--only", "NOPE", "--out", tmp_path / "v") == 2
    junk = tmp_path / "junk.kbf"
    junk.write_bytes(b"garbage")
    assert run("decompose", junk, "--out", tmp_path) == 2
    assert run("norms", tmp_path / "nofile.kbf", "--out", tmp_path) == 2
    monkeypatch.setenv("KB_THREADS", "abc")
    assert run("verify", "--only", "CL_ORDER", "--out", tmp_path / "v") == 2
    assert "error:" in capsys.readouterr().err


# verify ---------------------------------------------------------------------------
def test_verify_single_entry(tmp_path):
    out = tmp_path / "v"
    assert run("verify", "--only", "CL_ORDER", "--trials", 3, "--seed", 2, "--out", out) == 0
    bundle = json.loads((out / "verify.json").read_text())
    assert bundle["ids"] == ["CL_ORDER"] and bundle["spec"]["n_trials"] == 3 and bundle["spec"]["seed"] == 2
    assert read_csv(out / "CL_ORDER.csv")


# field commands --------------------------------------------------------------------
def field_file(tmp_path, values, grid, vgrid=None, times=None, name="f.kbf"):
    return FieldFile(values, grid, vgrid, times).write(tmp_path / name)


def test_decompose_zero_field(tmp_path):
    grid = FourierGrid(1, 32)
    path = field_file(tmp_path, np.zeros(grid.shape, complex), grid)
    assert run("decompose", path, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "decompose.csv")
    assert rows and all(float(r["block_norm"]) == 0.0 for r in rows)
    assert json.loads((tmp_path / "decompose.json").read_text())["norm"] == 0.0


def test_decompose_single_shell(tmp_path):
    grid = FourierGrid(1, 64)
    x = grid.points[0]
    path = field_file(tmp_path, np.cos(10 * x) + 0.3 * np.sin(11 * x), grid)
    assert run("decompose", path, "--out", tmp_path) == 0
    share = sorted((float(r["block_norm"]) ** 2 for r in read_csv(tmp_path / "decompose.csv")), reverse=True)
    assert sum(share[:2]) >= 0.99 * sum(share)


def test_decompose_reconstruction_sums(tmp_path):
    grid, vg = FourierGrid(1, 32), VelocityGrid(4.55, 5)
    rng = np.random.default_rng(0)
    phys = rng.normal(size=(3,) + grid.shape + (vg.size,))
    path = field_file(tmp_path, phys, grid, vg, np.array([0.0, 0.5, 1.0]))
    # homogeneous blocks omit the mean, so they reconstruct a zero-mean field
    centred = field_file(tmp_path, phys - phys.mean(axis=1, keepdims=True), grid, vg, np.array([0.0, 0.5, 1.0]),
                         name="c.kbf")
    assert run("decompose", centred, "--snapshot", 1, "--homogeneous", "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "decompose.json").read_text())
    assert abs(summary["reconstruction_sum"] - summary["norm"]) <= 1e-10 * summary["norm"]
    assert run("decompose", path, "--snapshot", 1, "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "decompose.json").read_text())
    assert summary["reconstruction_error"] < 1e-10
    assert abs(summary["reconstruction_sum"] - summary["norm"]) <= 1e-10 * summary["norm"]
    assert run("decompose", path, "--snapshot", 7, "--out", tmp_path) == 2


def test_norms_single_block(tmp_path):
    grid = FourierGrid(1, 64)
    x = grid.points[0]
    f = SpectralField.from_physical(grid, np.cos(11 * x))
    path = field_file(tmp_path, f.values, grid)
    assert run("norms", path, "--s", 1.5, "--out", tmp_path) == 0
    besov = json.loads((tmp_path / "norms.json").read_text())["besov"]
    assert abs(besov / (2 ** 4.5 * math.sqrt(math.pi)) - 1) < 1e-12


def test_norms_of_simulated_trajectory(tmp_path):
    cfg = write_config(tmp_path, solver={"snapshots": True})
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 0
    traj = tmp_path / "o" / "trajectory.kbf"
    assert FieldFile.read(traj).times.size == 6
    assert run("norms", traj, "--config", cfg, "--out", tmp_path / "n") == 0
    summary = json.loads((tmp_path / "n" / "norms.json").read_text())
    mixed = summary["mixed"]
    for key in ("2", "inf"):  # r = 1 <= min(rho1, rho2)
        assert mixed[f"chemin_lerner_rho1_{key}"] >= mixed[f"classical_rho1_{key}"] * (1 - 1e-12)
    diag = read_csv(tmp_path / "o" / "diagnostics.csv")
    assert abs(summary["energy"]["E_T"] / float(diag[-1]["E"]) - 1) < 1e-12


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "kblab.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "verify", "norms", "decompose"):
        assert cmd in out.stdout


def test_missing_subcommand():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2
