import json

import numpy as np

from maxslice.cli import main
from maxslice.fields import read_csv


def run(args):
    return main([str(a) for a in args])


def test_oracle_run(tmp_path):
    out = tmp_path / "oracle"
    rc = run(["oracle", "--C", 0.5, "--w0", 0, "--grid", "32x16", "--out", out])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok"
    assert man["schema_version"] == 1
    assert man["results"]["pde_residual_sup"] < 1e-3
    assert "spacelike_margin" in man["results"]
    u = read_csv(str(out / "solution.csv"))
    assert u.grid.nr == 32
    assert (out / "geometry.csv").read_text().splitlines()[0] == "r,theta,H,h2,gauss_residual"


def test_identity_run_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["identity", "--eps", 0.25, "--seed", 7, "--grid", "32x16", "--out", out1]) == 0
    assert run(["identity", "--eps", 0.25, "--seed", 7, "--grid", "32x16", "--out", out2]) == 0
    m1 = (out1 / "manifest.json").read_bytes()
    m2 = (out2 / "manifest.json").read_bytes()
    assert m1 == m2
    res = json.loads(m1)["results"]
    assert res["scaling_identity_dev"] < 1e-12
    assert res["jacobian_zero_dev_relative"] < 1e-11


def test_solve_run_manifest(tmp_path):
    out = tmp_path / "solve"
    rc = run(["solve", "--bdata", "harmonic:2,0:1.0", "--eps", 0.0025,
              "--grid", "32x16", "--out", out])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["results"]["verdict"] == "spacelike"
    sol = man["results"]["solution"]
    assert sol["residual_sup"] <= 1e-9
    assert sol["spacelike_margin"] > 0.05
    geo = man["results"]["geometry"]
    assert geo["h2_max"] > 0
    assert (out / "solution.csv").exists() and (out / "geometry.csv").exists()


def test_bad_config_exit_codes(tmp_path):
    assert run(["solve", "--bdata", "harmonic:2,0:1.0", "--eps", -1,
                "--grid", "32x16", "--out", tmp_path / "x"]) == 2
    assert run(["oracle", "--C", 1.5, "--out", tmp_path / "y"]) == 2
    assert run(["oracle", "--grid", "banana", "--out", tmp_path / "z"]) == 2


def test_solver_failure_exit_code(tmp_path):
    out = tmp_path / "fail"
    rc = run(["solve", "--bdata", "harmonic:2,0:1.0", "--eps", 100.0,
              "--grid", "32x16", "--out", out])
    assert rc == 1
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "failed"
    assert "NonSpacelike" in man["error"]


def test_sweep(tmp_path):
    out = tmp_path / "sweep"
    rc = run(["sweep", "--task", "oracle", "--grids", "32x16,64x32",
              "--C", 0.3, "--out", out])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["results"]["second_order_ok"]
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "grid,nr,dr,error"
    assert len(lines) == 3


def test_sweep_threads_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["sweep", "--task", "oracle", "--grids", "24x8,48x16", "--C", 0.3]
    assert main(["--threads", "2"] + [str(x) for x in base] + ["--out", str(a)]) == 0
    assert main(["--threads", "1"] + [str(x) for x in base] + ["--out", str(b)]) == 0
    ra = json.loads((a / "manifest.json").read_text())["results"]
    rb = json.loads((b / "manifest.json").read_text())["results"]
    assert ra == rb
    assert (a / "convergence.csv").read_bytes() == (b / "convergence.csv").read_bytes()


def test_fit_boundary_spec(tmp_path):
    out = tmp_path / "fit"
    rc = run(["fit-boundary", "--spec", "0.1,0.2,0.3,0.4",
              "--sphere", "32x64", "--out", out])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    fit = man["results"]["fit"]
    assert fit["geodesic"] and fit["residual"] < 1e-10
    assert abs(fit["A"] - 0.1) < 1e-8
    assert abs(man["results"]["constancy"]["mean"] - (0.01 + 0.04 + 0.09)) < 1e-9
    assert (out / "boundary.csv").exists()


def test_fit_boundary_file_roundtrip(tmp_path):
    out1 = tmp_path / "gen"
    run(["fit-boundary", "--spec", "0.0,0.0,0.5,0.3", "--sphere", "32x64",
         "--out", out1])
    out2 = tmp_path / "fit2"
    rc = run(["fit-boundary", "--input", out1 / "boundary.csv", "--out", out2])
    assert rc == 0
    man = json.loads((out2 / "manifest.json").read_text())
    assert abs(man["results"]["fit"]["C"] - 0.5) < 1e-8
    assert abs(man["results"]["fit"]["w0"] - 0.3) < 1e-8


def test_diagnose_roundtrip(tmp_path):
    src = tmp_path / "oracle"
    run(["oracle", "--C", 0.3, "--grid", "32x16", "--out", src])
    out = tmp_path / "diag"
    rc = run(["diagnose", "--solution", src / "solution.csv", "--out", out])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["results"]["geometry"]["g_positive"]


def test_solve_linear_run(tmp_path):
    out = tmp_path / "lin"
    rc = run(["solve-linear", "--eta", "barrier:2", "--bdata", "constant:0",
              "--grid", "32x16", "--out", out])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["results"]["barrier"]["positive"]
    assert man["results"]["barrier"]["bound_ok"]
    u = read_csv(str(out / "solution.csv"))
    tau2 = (0.5 * (1 - u.grid.r ** 2)) ** 2
    assert np.max(np.abs(u.interior - tau2[:, None])) < 1e-5


def test_outdir_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("MAXSLICE_OUTDIR", str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    assert run(["identity", "--grid", "32x16"]) == 0
    assert (tmp_path / "envout" / "manifest.json").exists()
