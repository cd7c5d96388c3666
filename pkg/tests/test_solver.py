import math

import numpy as np
import pytest

from maxslice.errors import (MaxIterations, NonSpacelikeField,
                             NonSpacelikeStep)
from maxslice.fields import ScalarField
from maxslice.geodesic import GeodesicSliceSpec, geodesic_height_field
from maxslice.grids import Grid
from maxslice.linear import BoundaryDatum, apply_linear, boundary_corrector
from maxslice.slicesolve import (SolverConfig, continuation_solve,
                                 jacobian_vector, newton_solve, residual)

from conftest import smooth_axisym, smooth_disk, rescale_spacelike


SPEC = GeodesicSliceSpec(0, 0, 0.3, 0.0)


def test_residual_constant_is_zero(grid3):
    assert residual(ScalarField.constant(grid3, 1.3)).sup() < 1e-11


def test_residual_nonspacelike_raises(grid3):
    ramp = smooth_axisym(grid3, seed=1, amplitude=0.97)
    with pytest.raises(NonSpacelikeField):
        residual(ramp, margin=0.05)


def test_geodesic_oracle_refinement():
    sups = []
    for nr, nt in ((48, 24), (96, 48)):
        g = Grid(3, nr, nt)
        sups.append(residual(geodesic_height_field(SPEC, g)).sup())
    assert sups[0] / sups[1] >= 3.5


def test_scaling_identity_dyadic(grid3):
    u = smooth_axisym(grid3, seed=2, amplitude=0.5)
    for eps in (0.0625, 0.25, 1.0):
        se = math.sqrt(eps)
        lhs = residual(se * u, eps=1.0)
        rhs = residual(u, eps=eps)
        assert np.max(np.abs(lhs.interior - se * rhs.interior)) < 1e-12


def test_scaling_identity_generic_eps(grid2):
    u = smooth_disk(grid2, seed=3, amplitude=0.4)
    eps = 0.3
    se = math.sqrt(eps)
    lhs = residual(se * u, eps=1.0)
    rhs = residual(u, eps=eps)
    scale = max(1.0, rhs.sup())
    assert np.max(np.abs(lhs.interior - se * rhs.interior)) < 1e-9 * scale


def test_jacobian_at_zero_is_linear_operator(grid3):
    for seed in range(5):
        v = smooth_axisym(grid3, seed=seed, amplitude=0.3)
        jv = jacobian_vector(ScalarField.zeros(grid3), v)
        lv = apply_linear(v)
        scale = max(lv.sup(), 1e-300)
        assert np.max(np.abs(jv.interior - lv.interior)) <= 1e-12 * scale


def test_jacobian_matches_finite_differences(grid3):
    # central-difference oracle; the step is kept moderate because the
    # difference quotient's rounding is amplified near the pole rings
    u = smooth_axisym(grid3, seed=10, amplitude=0.3)
    v = smooth_axisym(grid3, seed=11, amplitude=0.2)
    jv = jacobian_vector(u, v)
    h = 1e-4 * max(1.0, u.sup()) / max(1.0, v.sup())
    up = ScalarField(grid3, u.interior + h * v.interior, u.boundary + h * v.boundary)
    um = ScalarField(grid3, u.interior - h * v.interior, u.boundary - h * v.boundary)
    fd = (residual(up).interior - residual(um).interior) / (2 * h)
    scale = np.max(np.abs(fd))
    assert np.max(np.abs(jv.interior - fd)) < 1e-6 * scale


def test_newton_trivial_root(grid3):
    sol = newton_solve(BoundaryDatum.constant(0.0), ScalarField.zeros(grid3))
    assert sol.iterations == 0
    assert sol.residual_sup == 0.0


def test_newton_geodesic_convergence():
    # direct Newton at full amplitude, seeded by the solved linear problem
    # (the blended corrector seed leaves the spacelike margin at this
    # amplitude; the linear solution is the robust full-amplitude seed)
    from maxslice.linear import solve_linear
    g = Grid(3, 64, 32)
    bd = BoundaryDatum.geodesic(SPEC)
    seed = solve_linear(ScalarField.zeros(g), bd)
    sol = newton_solve(bd, seed, SolverConfig(tol=1e-10))
    exact = geodesic_height_field(SPEC, g)
    assert np.max(np.abs(sol.u.interior - exact.interior)) < 1e-6
    assert sol.spacelike_margin > 0.5


def test_newton_uniqueness_probe():
    g = Grid(3, 48, 24)
    bd = BoundaryDatum.geodesic(GeodesicSliceSpec(0, 0, 0.2, 0.0))
    seed1 = boundary_corrector(bd, g)
    sol1 = newton_solve(bd, seed1, SolverConfig(tol=1e-11))
    bump = smooth_axisym(g, seed=4, amplitude=0.05)
    bump = ScalarField(g, bump.interior * g.rad(1 - g.r ** 2), np.zeros(g.sphere.shape))
    seed2 = ScalarField(g, seed1.interior + bump.interior, seed1.boundary)
    sol2 = newton_solve(bd, seed2, SolverConfig(tol=1e-11))
    assert np.max(np.abs(sol1.u.interior - sol2.u.interior)) < 1e-9


def test_newton_max_iterations(grid3):
    bd = BoundaryDatum.geodesic(GeodesicSliceSpec(0, 0, 0.25, 0.0))
    seed = boundary_corrector(bd, grid3)
    with pytest.raises(MaxIterations):
        newton_solve(bd, seed, SolverConfig(tol=1e-16, max_iter=1))


def test_continuation_zero_eps(grid3):
    sol = continuation_solve(BoundaryDatum.harmonic({(2, 0): 1.0}), 0.0, grid=grid3)
    assert sol.residual_sup == 0.0
    assert sol.u.sup() == 0.0
    assert sol.eps == 0.0


def test_continuation_geodesic_oracle():
    for nr, nt in ((48, 24), (96, 48)):
        g = Grid(3, nr, nt)
        sol = continuation_solve(BoundaryDatum.geodesic(SPEC), 1.0,
                                 SolverConfig(tol=1e-10), grid=g)
        exact = geodesic_height_field(SPEC, g)
        err = np.max(np.abs(sol.u.interior - exact.interior))
        if nr == 48:
            err48 = err
        else:
            assert err48 / err >= 3.5        # oracle error drops at >= 2nd order
    assert sol.spacelike_margin > 0.5


def test_continuation_overdriven_amplitude(grid3):
    bd = BoundaryDatum.harmonic({(2, 0): 1.0})
    with pytest.raises(NonSpacelikeStep) as err:
        continuation_solve(bd, 100.0, SolverConfig(tol=1e-9), grid=grid3)
    assert err.value.failing_lambda is not None
    assert err.value.best_amplitude is not None
    assert err.value.best_amplitude < 10.0


def test_newton_margin_monitor_direct():
    g = Grid(3, 48, 24)
    bd = BoundaryDatum.harmonic({(2, 0): 1.0}, amplitude=0.64)
    seed = boundary_corrector(bd, g)
    with pytest.raises((NonSpacelikeStep, NonSpacelikeField)):
        newton_solve(bd, seed, SolverConfig(tol=1e-10))


def test_reflection_symmetry():
    g = Grid(3, 48, 24)
    bd_a = BoundaryDatum.harmonic({(1, 0): 1.0, (2, 0): 0.4})
    # theta -> pi - theta flips the sign of odd-degree harmonics
    bd_b = BoundaryDatum.harmonic({(1, 0): -1.0, (2, 0): 0.4})
    cfg = SolverConfig(tol=1e-11)
    sa = continuation_solve(bd_a, 0.0025, cfg, grid=g)
    sb = continuation_solve(bd_b, 0.0025, cfg, grid=g)
    flipped = sb.u.interior[:, ::-1]
    assert np.max(np.abs(sa.u.interior - flipped)) < 1e-10


def test_newton_quadratic_tail():
    g = Grid(3, 48, 24)
    bd = BoundaryDatum.geodesic(GeodesicSliceSpec(0, 0, 0.55, 0.0))
    sol = continuation_solve(bd, 1.0, SolverConfig(tol=1e-11), grid=g)
    pairs = []
    for rung in sol.log:
        hist = rung["residuals"]
        for a, b in zip(hist, hist[1:]):
            if 1e-9 < a < 1e-4 and b > 1e-14:
                pairs.append(b / a ** 2)
    assert pairs, "no measurable quadratic tail"
    assert max(pairs) < 1e5
