import math

import numpy as np
import pytest

from maxslice.ball import BallPoint, ambient_embed, minkowski_inner
from maxslice.errors import ConfigError, NotSpacelikeHyperplane
from maxslice.geodesic import (GeodesicSliceSpec, boundary_trace,
                               fit_geodesic_trace, geodesic_height,
                               geodesic_height_field, trace_constancy_check)
from maxslice.grids import Grid, SphereGrid
from maxslice.slicesolve import residual

SPHERE = SphereGrid("full", 48, 128)


def test_spec_validation():
    with pytest.raises(NotSpacelikeHyperplane):
        GeodesicSliceSpec(0.8, 0.6, 0.3, 0.0)
    s = GeodesicSliceSpec(0.1, 0.2, 0.3, 0.4)
    a = s.hyperplane_vector()
    assert minkowski_inner(a, a) == pytest.approx(s.norm2() - 1.0, abs=1e-14)


def test_height_frozen_values():
    s = GeodesicSliceSpec(0, 0, 0.5, 0.0)
    assert geodesic_height(s, BallPoint.from_polar(1.0, 0.0, 0.0)) == pytest.approx(math.pi / 3, abs=1e-14)
    assert geodesic_height(s, BallPoint((0, 0, 0))) == pytest.approx(math.pi / 2, abs=1e-14)
    s0 = GeodesicSliceSpec(0, 0, 0, 0.25)
    p = BallPoint.from_polar(0.3, 1.0, 2.0)
    assert geodesic_height(s0, p) == pytest.approx(math.pi / 2 - 0.25, abs=1e-14)


def test_hyperplane_membership():
    s = GeodesicSliceSpec(0.15, -0.2, 0.35, 0.6)
    a = s.hyperplane_vector()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        p = BallPoint.from_polar(rng.uniform(0, 0.999), rng.uniform(0, math.pi),
                                 rng.uniform(0, 2 * math.pi))
        X = ambient_embed(p, geodesic_height(s, p))
        worst = max(worst, abs(minkowski_inner(X, a)))
    assert worst < 1e-12 * 100     # |X| grows near the boundary; scaled slack


def test_boundary_trace_values():
    s = GeodesicSliceSpec(0, 0, 0.5, 0.0)
    w, f = boundary_trace(s, SPHERE)
    want = 0.5 * np.cos(SPHERE.theta)[:, None] * np.ones((1, SPHERE.nphi))
    assert np.max(np.abs(f - want)) < 1e-13
    s0 = GeodesicSliceSpec(0, 0, 0, 0.3)
    w0, _ = boundary_trace(s0, SPHERE)
    assert np.max(np.abs(w0 - (math.pi / 2 - 0.3))) < 1e-14


def test_trace_f_identity_generic():
    s = GeodesicSliceSpec(0.2, -0.1, 0.4, 1.1)
    w, f = boundary_trace(s, SPHERE)
    g = s.direction_values(SPHERE)
    assert np.max(np.abs(f - g)) < 1e-13


def test_fit_roundtrip_random_specs():
    rng = np.random.default_rng(1)
    for _ in range(8):
        vec = rng.uniform(-1, 1, 3)
        vec *= rng.uniform(0.1, 0.85) / np.linalg.norm(vec)
        spec = GeodesicSliceSpec(*vec, rng.uniform(0, 2 * math.pi))
        w, _ = boundary_trace(spec, SPHERE)
        fit = fit_geodesic_trace(w, SPHERE)
        assert fit.geodesic and fit.residual < 1e-10
        want = spec.canonical()
        got = fit.spec().canonical()
        assert abs(got.A - want.A) < 1e-9
        assert abs(got.B - want.B) < 1e-9
        assert abs(got.C - want.C) < 1e-9
        assert abs(got.w0 - want.w0) < 1e-9


def test_fit_rejects_degree_two():
    w = np.arccos(0.4 * (3 * np.cos(SPHERE.theta)[:, None] ** 2 - 1) / 2
                  * np.ones((1, SPHERE.nphi)))
    fit = fit_geodesic_trace(w, SPHERE)
    assert not fit.geodesic
    assert fit.residual > 1e-3


def test_fit_constant_trace_canonical():
    w = np.full(SPHERE.shape, 0.9)
    fit = fit_geodesic_trace(w, SPHERE)
    assert fit.constant_trace and fit.geodesic
    assert fit.A == fit.B == fit.C == 0.0
    assert fit.w0 == pytest.approx((math.pi / 2 - 0.9) % math.pi, abs=1e-12)
    assert fit.residual == 0.0


def test_fit_disk_analogue():
    s1 = SphereGrid("fourier", 256)
    spec = GeodesicSliceSpec(0.3, -0.4, 0.0, 0.7)
    w, _ = boundary_trace(spec, s1)
    fit = fit_geodesic_trace(w, s1)
    got = fit.spec().canonical()
    want = spec.canonical()
    assert fit.residual < 1e-10
    assert abs(got.A - want.A) < 1e-8 and abs(got.B - want.B) < 1e-8


def test_constancy_check_geodesic():
    spec = GeodesicSliceSpec(0.1, 0.25, 0.4, 0.9)
    w, _ = boundary_trace(spec, SPHERE)
    rep = trace_constancy_check(w, SPHERE)
    assert rep.max_deviation < 1e-10
    assert abs(rep.mean - spec.norm2()) < 1e-10
    assert abs(rep.mean - rep.fitted_norm2) < 1e-9


def test_constancy_check_flags_degree_two():
    w = np.arccos(0.4 * (3 * np.cos(SPHERE.theta)[:, None] ** 2 - 1) / 2
                  * np.ones((1, SPHERE.nphi)))
    rep = trace_constancy_check(w, SPHERE)
    assert rep.max_deviation > 0.05


def test_constancy_needs_full_sphere():
    s1 = SphereGrid("fourier", 64)
    with pytest.raises(ConfigError):
        trace_constancy_check(np.zeros(64), s1)


def test_geodesic_solves_equation_n2():
    spec = GeodesicSliceSpec(0.25, -0.15, 0.0, 0.4)
    sups = []
    for nr, nt in ((48, 32), (96, 64)):
        g = Grid(2, nr, nt)
        sups.append(residual(geodesic_height_field(spec, g)).sup())
    assert sups[0] / sups[1] >= 3.5


def test_json_roundtrip():
    s = GeodesicSliceSpec(0.1, 0.2, 0.3, 0.4)
    assert GeodesicSliceSpec.from_json(s.to_json()) == s
