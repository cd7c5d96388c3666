import numpy as np
import pytest

from maxslice.fields import ScalarField
from maxslice.grids import Grid
from maxslice.kernel import SliceKernel


def smooth_axisym(grid, seed, lmax=4, amplitude=None):
    """Deterministic smooth field on an axisymmetric grid: combinations of
    solid harmonics r^l P_l(cos t) with even radial envelopes."""
    rng = np.random.default_rng(seed)
    x = np.cos(grid.sphere.theta)
    prof = np.zeros(grid.shape)
    bnd = np.zeros(grid.sphere.shape)
    for l in range(lmax + 1):
        cl = rng.uniform(-1, 1)
        dl = rng.uniform(-0.5, 0.5)
        pl = np.polynomial.legendre.legval(x, [0.0] * l + [1.0])
        rad = grid.r ** l * (1.0 + dl * grid.r ** 2)
        prof += cl * rad[:, None] * pl[None, :]
        bnd += cl * (1.0 + dl) * pl
    f = ScalarField(grid, prof, bnd)
    if amplitude is not None:
        f = rescale_spacelike(f, amplitude)
    return f


def smooth_disk(grid, seed, kmax=4, amplitude=None):
    rng = np.random.default_rng(seed)
    th = grid.sphere.theta
    prof = np.zeros(grid.shape)
    bnd = np.zeros(grid.sphere.shape)
    for k in range(kmax + 1):
        ck = rng.uniform(-1, 1)
        dk = rng.uniform(-0.5, 0.5)
        ph = rng.uniform(0, 2 * np.pi)
        rad = grid.r ** k * (1.0 + dk * grid.r ** 2)
        prof += ck * rad[:, None] * np.cos(k * th + ph)[None, :]
        bnd += ck * (1.0 + dk) * np.cos(k * th + ph)
    f = ScalarField(grid, prof, bnd)
    if amplitude is not None:
        f = rescale_spacelike(f, amplitude)
    return f


def smooth_field(grid, seed, amplitude=None):
    if grid.n == 2:
        return smooth_disk(grid, seed, amplitude=amplitude)
    if grid.sphere.kind == "axisym":
        return smooth_axisym(grid, seed, amplitude=amplitude)
    raise NotImplementedError


def rescale_spacelike(f, q_target):
    """Scale a field so that max (1-tau)^2 |grad u|^2 equals q_target."""
    q = SliceKernel(f.grid, 0.0).state(f)["qmax"]
    return f * (np.sqrt(q_target / q) if q > 0 else 1.0)


@pytest.fixture(scope="session")
def grid3():
    return Grid(3, 48, 24)


@pytest.fixture(scope="session")
def grid2():
    return Grid(2, 48, 32)
