import numpy as np
import pytest

from maxslice.errors import NonSpacelikeField
from maxslice.fields import ScalarField
from maxslice.geodesic import GeodesicSliceSpec, geodesic_height_field
from maxslice.geometry import (gauss_check, mean_curvature,
                               second_form_decay, second_fundamental_form,
                               slice_geometry, unit_normal)
from maxslice.grids import Grid
from maxslice.linear import BoundaryDatum
from maxslice.slicesolve import SolverConfig, continuation_solve

from conftest import smooth_axisym

SPEC = GeodesicSliceSpec(0, 0, 0.3, 0.0)


def test_time_slice_floors(grid3):
    rep = slice_geometry(ScalarField.constant(grid3, 0.7))
    assert rep.h2.max() < 1e-20
    assert np.max(np.abs(rep.H_div)) < 1e-11
    assert np.max(np.abs(rep.H_emb)) < 1e-11
    assert rep.gauss_residual.max() < 1e-11
    assert rep.normal_norm_error < 1e-11
    assert rep.h_decay is None and rep.h_decay_status == "floor"
    assert rep.g_positive


def test_time_slice_normal_components(grid3):
    # N = tanh(rho) d_t for the trivial slice
    out = unit_normal(ScalarField.constant(grid3, 0.0))
    grid = out["grid"]
    r = grid.r[:, None, None]
    tanh = (0.5 * (1 - r ** 2)) / (0.5 * (1 + r ** 2))
    assert np.max(np.abs(out["t"] - tanh)) < 1e-13
    assert np.max(np.abs(out["spatial"])) < 1e-13
    assert out["norm_error"] < 1e-11
    assert out["orthogonality"] < 1e-10


def test_geodesic_slice_geometry_refines():
    vals = {}
    for nr, nt in ((32, 16), (64, 32)):
        g = Grid(3, nr, nt)
        rep = slice_geometry(geodesic_height_field(SPEC, g))
        vals[nr] = (np.sqrt(rep.h2.max()), np.max(np.abs(rep.H_div)),
                    rep.gauss_residual.max(), rep.H_consistency)
        assert rep.normal_norm_error < 1e-11
        assert rep.h_symmetry_error < 1e-10
        assert rep.h_decay is None      # at the floor: exact slice is geodesic
    for k in range(4):
        assert vals[32][k] / vals[64][k] >= 3.5


def test_mean_curvature_routes_agree():
    g = Grid(3, 48, 24)
    u = smooth_axisym(g, seed=21, amplitude=0.3)
    hd = mean_curvature(u, "divergence")
    he = mean_curvature(u, "embedding")
    inset = slice(0, g.nr - 4)
    dev = np.max(np.abs(hd.interior[inset] - he.interior[inset]))
    assert dev < 5e-3 * max(1.0, np.max(np.abs(hd.interior[inset])))


def test_mean_curvature_consistency_refines():
    devs = []
    for nr, nt in ((32, 16), (64, 32)):
        g = Grid(nr=nr, ntheta=nt, n=3)
        u = smooth_axisym(g, seed=22, amplitude=0.3)
        devs.append(slice_geometry(u, with_gauss=False).H_consistency)
    assert devs[0] / devs[1] >= 3.5


def test_gauss_identity_random_spacelike():
    sups = []
    for nr, nt in ((32, 16), (64, 32)):
        g = Grid(3, nr, nt)
        u = smooth_axisym(g, seed=23, amplitude=0.4)
        sups.append(float(gauss_check(u).max()))
    assert sups[0] / sups[1] >= 3.5


def test_normal_rejects_nonspacelike(grid3):
    ramp = smooth_axisym(grid3, seed=24, amplitude=0.99)
    with pytest.raises(NonSpacelikeField):
        unit_normal(ramp)


def test_second_fundamental_form_bundle(grid3):
    u = geodesic_height_field(SPEC, grid3)
    out = second_fundamental_form(u)
    h = out["h"]
    assert np.max(np.abs(h - np.swapaxes(h, -1, -2))) < 1e-10
    # ghat positive definite for spacelike graphs: Sherman-Morrison inverse
    gh, ghi = out["ghat"], out["ghat_inv"]
    eye = np.einsum("...ij,...jk->...ik", gh, ghi)
    assert np.max(np.abs(eye - np.eye(3))) < 1e-10
    assert out["spacelike_margin"] > 0.5


def test_solved_slice_h_decay():
    g = Grid(3, 96, 48)
    sol = continuation_solve(BoundaryDatum.harmonic({(2, 0): 1.0}), 0.0025,
                             SolverConfig(tol=1e-9), grid=g)
    fit, floor = second_form_decay(sol.u)
    assert fit is not None
    assert fit.exponent >= 1.5
    assert fit.r_squared >= 0.95


def test_geometry_report_fields(grid3):
    rep = slice_geometry(geodesic_height_field(SPEC, grid3), with_gauss=False)
    assert rep.inset == 4
    assert rep.H_div.shape[0] == grid3.nr - rep.inset
    assert rep.spacelike_margin > 0
