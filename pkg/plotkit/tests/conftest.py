import subprocess
import sys

import pytest


def run_maxslice(args):
    """Drive the primary tool through its CLI (the external interface)."""
    proc = subprocess.run([sys.executable, "-m", "maxslice.cli", *map(str, args)],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"maxslice failed ({proc.returncode}): {proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def solve_run(tmp_path_factory):
    """A completed `solve` run directory."""
    out = tmp_path_factory.mktemp("runs") / "solve"
    run_maxslice(["solve", "--bdata", "harmonic:2,0:1.0", "--eps", "0.0025",
                  "--grid", "96x48", "--out", out])
    return out


@pytest.fixture(scope="session")
def fit_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "fit"
    run_maxslice(["fit-boundary", "--spec", "0.0,0.1,0.4,0.3",
                  "--sphere", "32x64", "--out", out])
    return out


@pytest.fixture(scope="session")
def sweep_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "sweep"
    run_maxslice(["sweep", "--task", "oracle", "--grids", "24x8,48x16",
                  "--out", out])
    return out
