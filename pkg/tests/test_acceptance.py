"""Acceptance suite: the package's exit criteria at their stated tolerances.

Each test prints one PASS line when its criterion holds; run with
`pytest tests/test_acceptance.py -v -s` to see the values.  The heavier
solves and geometry passes are shared through session-scoped fixtures.
"""

import math

import numpy as np
import pytest

from maxslice.fields import ScalarField
from maxslice.geodesic import (GeodesicSliceSpec, boundary_trace,
                               fit_geodesic_trace, geodesic_height_field,
                               trace_constancy_check)
from maxslice.geometry import gauss_check, slice_geometry
from maxslice.grids import Grid, SphereGrid
from maxslice.linear import (BoundaryDatum, _l2, apply_linear, barrier_image,
                             boundary_corrector, solve_linear)
from maxslice.norms import decay_exponent
from maxslice.slicesolve import (SolverConfig, continuation_solve,
                                 jacobian_vector, residual)

from conftest import smooth_axisym

CONTROL_SPEC = GeodesicSliceSpec(0, 0, 0.3, 0.0)
DEG2 = BoundaryDatum.harmonic({(2, 0): 1.0})


def report(num, text):
    print(f"\nPASS criterion {num}: {text}")


@pytest.fixture(scope="module")
def solved_64():
    g = Grid(3, 64, 32)
    return continuation_solve(DEG2, 0.0025, SolverConfig(tol=1e-9), grid=g)


@pytest.fixture(scope="module")
def solved_128():
    g = Grid(3, 128, 64)
    return continuation_solve(DEG2, 0.0025, SolverConfig(tol=1e-9), grid=g)


@pytest.fixture(scope="module")
def geometry_64(solved_64):
    return slice_geometry(solved_64.u, with_gauss=False)


@pytest.fixture(scope="module")
def geometry_128(solved_128):
    return slice_geometry(solved_128.u, with_gauss=False)


def test_criterion_1_exact_oracle_convergence():
    sups = []
    for nr, nt in ((64, 32), (128, 64), (256, 128)):
        g = Grid(3, nr, nt)
        u = geodesic_height_field(CONTROL_SPEC, g)
        sups.append(residual(u, eps=1.0).sup())
    r1, r2 = sups[0] / sups[1], sups[1] / sups[2]
    assert r1 >= 3.5 and r2 >= 3.5
    report(1, f"oracle residual sups {[f'{s:.3e}' for s in sups]}, "
              f"refinement ratios {r1:.2f}, {r2:.2f} >= 3.5")


def test_criterion_2_manufactured_linear_solution():
    errs = []
    for nr, nt in ((64, 32), (128, 64)):
        g = Grid(3, nr, nt)
        eta = ScalarField(g, barrier_image(2.0, g))
        u = solve_linear(eta, 0.0)
        exact = np.broadcast_to(g.rad(g.tau ** 2), g.shape)
        errs.append(float(np.max(np.abs(u.interior - exact))))
    assert errs[1] <= 1e-3
    assert errs[0] / errs[1] >= 3.5
    report(2, f"manufactured max error {errs[1]:.3e} <= 1e-3 at 128x64, "
              f"refinement ratio {errs[0]/errs[1]:.2f} >= 3.5")


def test_criterion_3_corrector_decay():
    g = Grid(3, 128, 64)
    cor = boundary_corrector(DEG2, g)
    fit = decay_exponent(apply_linear(cor))
    assert fit.exponent >= 3.5
    report(3, f"corrector image decay exponent {fit.exponent:.3f} >= 3.5 "
              f"(R^2 = {fit.r_squared:.5f}, window {fit.window})")


def test_criterion_4_linearization_identity():
    g = Grid(3, 48, 24)
    zero = ScalarField.zeros(g)
    worst = 0.0
    for seed in range(10):
        v = smooth_axisym(g, seed=seed, amplitude=0.3)
        jv = jacobian_vector(zero, v)
        lv = apply_linear(v)
        worst = max(worst, np.max(np.abs(jv.interior - lv.interior))
                    / max(lv.sup(), 1e-300))
    assert worst <= 1e-11
    report(4, f"max relative |J(0)v - Lv| over 10 fields = {worst:.2e} <= 1e-11")


def test_criterion_5_scaling_identity():
    g = Grid(3, 48, 24)
    worst = 0.0
    for seed in range(10):
        u = smooth_axisym(g, seed=100 + seed, amplitude=0.5)
        for eps in (0.0625, 0.25, 1.0):
            se = math.sqrt(eps)
            lhs = residual(se * u, eps=1.0)
            rhs = residual(u, eps=eps)
            worst = max(worst, float(np.max(np.abs(lhs.interior - se * rhs.interior))))
    assert worst <= 1e-12
    report(5, f"max pointwise scaling-identity deviation = {worst:.2e} <= 1e-12 "
              f"(10 fields x eps in {{1/16, 1/4, 1}})")


def test_criterion_6_small_data_existence(solved_64):
    sol = solved_64
    assert sol.iterations <= 10
    assert sol.residual_sup <= 1e-8
    assert sol.spacelike_margin >= 0.05
    report(6, f"continuation solve: final rung {sol.iterations} Newton iterations "
              f"<= 10, residual {sol.residual_sup:.2e} <= 1e-8, "
              f"margin {sol.spacelike_margin:.3f} >= 0.05")


def test_criterion_7_trace_roundtrip():
    sphere = SphereGrid("full", 48, 128)
    rng = np.random.default_rng(42)
    worst_par, worst_res = 0.0, 0.0
    for _ in range(20):
        vec = rng.uniform(-1, 1, 3)
        vec *= rng.uniform(0.1, 0.85) / np.linalg.norm(vec)
        spec = GeodesicSliceSpec(*vec, rng.uniform(0, 2 * math.pi))
        w, _ = boundary_trace(spec, sphere)
        fit = fit_geodesic_trace(w, sphere)
        want = spec.canonical()
        got = fit.spec().canonical()
        worst_par = max(worst_par, abs(got.A - want.A), abs(got.B - want.B),
                        abs(got.C - want.C), abs(got.w0 - want.w0))
        worst_res = max(worst_res, fit.residual)
        assert fit.geodesic
    assert worst_res < 1e-10
    assert worst_par < 1e-8
    w2 = np.arccos(0.4 * (3 * np.cos(sphere.theta)[:, None] ** 2 - 1) / 2
                   * np.ones((1, sphere.nphi)))
    fit2 = fit_geodesic_trace(w2, sphere)
    assert not fit2.geodesic and fit2.residual > 1e-3
    report(7, f"20 round-trips: worst parameter error {worst_par:.2e}, worst "
              f"residual {worst_res:.2e} < 1e-10; degree-2 trace rejected "
              f"(residual {fit2.residual:.3f} > 1e-3)")


def test_criterion_8_trace_constancy():
    sphere = SphereGrid("full", 48, 128)
    rng = np.random.default_rng(43)
    worst_dev, worst_match = 0.0, 0.0
    for _ in range(10):
        vec = rng.uniform(-1, 1, 3)
        vec *= rng.uniform(0.1, 0.85) / np.linalg.norm(vec)
        spec = GeodesicSliceSpec(*vec, rng.uniform(0, 2 * math.pi))
        w, _ = boundary_trace(spec, sphere)
        rep = trace_constancy_check(w, sphere)
        worst_dev = max(worst_dev, rep.max_deviation)
        worst_match = max(worst_match, abs(rep.mean - rep.fitted_norm2))
    assert worst_dev < 1e-9
    assert worst_match < 1e-9
    report(8, f"f^2 + |grad_S f|^2 constancy: worst deviation {worst_dev:.2e} "
              f"< 1e-9; constant matches fitted A^2+B^2+C^2 to {worst_match:.2e}")


def test_criterion_9_bernstein_failure(geometry_64, geometry_128):
    ratios = []
    controls = []
    for rep, (nr, nt) in ((geometry_64, (64, 32)), (geometry_128, (128, 64))):
        g = Grid(3, nr, nt)
        ctrl = slice_geometry(geodesic_height_field(CONTROL_SPEC, g),
                              with_gauss=False)
        ratios.append(rep.h2.max() / ctrl.h2.max())
        controls.append(ctrl.h2.max())
        assert rep.h2.max() > 10.0 * ctrl.h2.max()
    assert controls[0] / controls[1] >= 2.0          # control vanishes
    assert abs(geometry_64.h2.max() / geometry_128.h2.max() - 1.0) < 0.2
    report(9, f"solved |h|^2 exceeds the geodesic control by factors "
              f"{ratios[0]:.1e}, {ratios[1]:.1e} (> 10); control shrinks "
              f"{controls[0]/controls[1]:.1f}x under refinement, solved is stable")


def test_criterion_10_h_decay(geometry_128):
    fit = geometry_128.h_decay
    assert fit is not None
    assert fit.exponent >= 1.5
    assert fit.r_squared >= 0.95
    report(10, f"solved-slice |h|^2 decay exponent {fit.exponent:.3f} >= 1.5 "
               f"(expected ~2), R^2 = {fit.r_squared:.5f} >= 0.95")


def test_criterion_11_gauss_identity():
    lines = []
    # (a) time slice: evaluates exactly; residual sits at rounding on every
    # grid, which satisfies the convergence requirement trivially
    floors = []
    for nr, nt in ((32, 16), (64, 32)):
        g = Grid(3, nr, nt)
        floors.append(float(gauss_check(ScalarField.constant(g, 0.4)).max()))
    assert max(floors) < 1e-12
    lines.append(f"time slice at rounding ({max(floors):.1e})")
    # (b) geodesic slice and (c) random smooth spacelike field
    for label, make in (
            ("geodesic", lambda g: geodesic_height_field(CONTROL_SPEC, g)),
            ("random spacelike", lambda g: smooth_axisym(g, seed=77, amplitude=0.4))):
        sups = []
        for nr, nt in ((32, 16), (64, 32)):
            g = Grid(3, nr, nt)
            sups.append(float(gauss_check(make(g)).max()))
        ratio = sups[0] / sups[1]
        assert ratio >= 3.5
        lines.append(f"{label} ratio {ratio:.2f}")
    report(11, "Gauss identity: " + "; ".join(lines))


def test_criterion_12_maximum_principle_bound():
    sups = []
    for nr, nt in ((64, 32), (128, 64), (256, 128)):
        g = Grid(3, nr, nt)
        eta = ScalarField(g, np.broadcast_to(g.rad(g.tau ** 2), g.shape).copy())
        u = solve_linear(eta, 0.0)
        w = g.rad(g.tau ** (-2.0))
        sups.append(float(np.max(np.abs(w * u.interior))))
    spread = (max(sups) - min(sups)) / min(sups)
    assert spread < 0.10
    report(12, f"sup tau^-2 |u| across three refinements: "
               f"{[f'{s:.6f}' for s in sups]}, spread {100*spread:.2f}% < 10%")
