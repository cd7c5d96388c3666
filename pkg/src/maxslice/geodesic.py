"""Closed-form totally geodesic slices and their boundary diagnostics.

A totally geodesic spacelike slice of the anti-de Sitter quadric is its
intersection with a hyperplane <X, a> = 0 through the origin of the ambient
semi-Euclidean space, for a constant vector a with <a, a> < 0.  Normalizing
the two timelike components to cos(w0), -sin(w0) and writing (A, B, C) for
the spatial part, the height function of the slice over the ball is

    u(x) = -w0 + arccos( lam(r) g(omega) ),      lam(r) = 2 r / (1 + r^2),
    g(omega) = A ox + B oy + C oz    (unit direction omega),

valid whenever A^2 + B^2 + C^2 < 1 (the principal arccos branch applies
since |lam g| < 1).  The boundary trace w = u|_{r=1} satisfies
cos(w + w0) = g exactly, and f = cos(w + w0) is therefore a pure degree-one
spherical harmonic; conversely, a maximal slice whose trace has that form
is the totally geodesic one.  The fitter below decides this by projecting
cos(w + w0) onto the degree-one span and minimizing over w0.

For n = 2 the analogue uses (A, B, w0) with g = A cos t + B sin t on the
circle; it is a derived extension validated through the equation residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ball import BallPoint
from .errors import ConfigError, DegenerateFit, NotSpacelikeHyperplane
from .fields import ScalarField
from .grids import SphereGrid

__all__ = [
    "GeodesicSliceSpec", "geodesic_height", "geodesic_height_field",
    "boundary_trace", "fit_geodesic_trace", "TraceFit",
    "trace_constancy_check", "ConstancyReport",
]


@dataclass(frozen=True)
class GeodesicSliceSpec:
    """Parameters (A, B, C, w0) of a totally geodesic slice.

    Requires A^2 + B^2 + C^2 < 1 strictly.  n = 2 slices use C = 0 and
    interpret (A, B) against (cos theta, sin theta).
    """

    A: float
    B: float
    C: float = 0.0
    w0: float = 0.0

    def __post_init__(self):
        if self.norm2() >= 1.0:
            raise NotSpacelikeHyperplane(
                f"A^2 + B^2 + C^2 = {self.norm2():.6f} must be < 1")

    def norm2(self):
        return self.A ** 2 + self.B ** 2 + self.C ** 2

    def hyperplane_vector(self, n=3):
        """The ambient normal a, scale-fixed so the timelike part is a unit
        pair (cos w0, -sin w0); <a, a> = A^2 + B^2 + C^2 - 1 < 0."""
        spatial = [self.A, self.B, self.C] if n == 3 else [self.A, self.B]
        return np.array(spatial + [math.cos(self.w0), -math.sin(self.w0)])

    def direction_values(self, sphere: SphereGrid):
        """g(omega) sampled on a sphere grid."""
        if sphere.kind == "fourier":
            return self.A * np.cos(sphere.theta) + self.B * np.sin(sphere.theta)
        ct = np.cos(sphere.theta)
        st = sphere.sin_theta
        if sphere.kind == "axisym":
            if self.A != 0.0 or self.B != 0.0:
                raise ConfigError("axisymmetric grids resolve only A = B = 0 slices")
            return self.C * ct
        cp = np.cos(sphere.phi)[None, :]
        sp = np.sin(sphere.phi)[None, :]
        return (self.A * st[:, None] * cp + self.B * st[:, None] * sp
                + self.C * ct[:, None])

    def canonical(self):
        """Representative with w0 in [0, pi): (w0 + pi, -A, -B, -C) names the
        same slice."""
        w0 = self.w0 % (2.0 * math.pi)
        if w0 < math.pi:
            return GeodesicSliceSpec(self.A, self.B, self.C, w0)
        return GeodesicSliceSpec(-self.A, -self.B, -self.C, w0 - math.pi)

    def to_json(self):
        return {"A": self.A, "B": self.B, "C": self.C, "w0": self.w0}

    @classmethod
    def from_json(cls, obj):
        return cls(float(obj["A"]), float(obj["B"]), float(obj.get("C", 0.0)),
                   float(obj.get("w0", 0.0)))


def geodesic_height(spec: GeodesicSliceSpec, p: BallPoint) -> float:
    """Height of the geodesic slice over one ball point (boundary allowed)."""
    x = np.asarray(p.cartesian)
    r = p.r
    lam = 2.0 * r / (1.0 + r * r)
    omega = x / r if r > 0 else np.zeros_like(x)
    vec = np.array([spec.A, spec.B, spec.C][:p.n])
    g = float(vec @ omega)
    return -spec.w0 + math.acos(max(-1.0, min(1.0, lam * g)))


def geodesic_height_field(spec: GeodesicSliceSpec, grid) -> ScalarField:
    """The exact slice sampled on a grid, boundary trace included."""
    g_ang = spec.direction_values(grid.sphere)
    lam = 2.0 * grid.r / (1.0 + grid.r ** 2)
    interior = -spec.w0 + np.arccos(grid.rad(lam) * g_ang[None])
    boundary = -spec.w0 + np.arccos(g_ang)
    return ScalarField(grid, interior, boundary)


def boundary_trace(spec: GeodesicSliceSpec, sphere: SphereGrid):
    """(w, f) samples on the boundary: w = -w0 + arccos(g), f = cos(w + w0)."""
    g = spec.direction_values(sphere)
    w = -spec.w0 + np.arccos(g)
    return w, np.cos(w + spec.w0)


@dataclass
class TraceFit:
    A: float
    B: float
    C: float
    w0: float
    residual: float          # relative L2 distance of cos(w + w0) to degree one
    geodesic: bool
    constant_trace: bool = False

    def spec(self):
        return GeodesicSliceSpec(self.A, self.B, self.C, self.w0)


def _degree_one_basis(sphere):
    if sphere.kind == "fourier":
        return [np.cos(sphere.theta), np.sin(sphere.theta)]
    ct = np.cos(sphere.theta)
    st = sphere.sin_theta
    if sphere.kind == "axisym":
        return [ct]
    cp = np.cos(sphere.phi)[None, :]
    sp = np.sin(sphere.phi)[None, :]
    ones = np.ones_like(cp)
    return [st[:, None] * cp, st[:, None] * sp, ct[:, None] * ones]


def _projection_residual2(sphere, f, basis):
    """Squared L2 distance from f to span(basis), by quadrature."""
    coeffs = [sphere.integrate(f * e) / sphere.integrate(e * e) for e in basis]
    proj = sum(c * e for c, e in zip(coeffs, basis))
    d = f - proj
    return float(sphere.integrate(d * d)), coeffs


def fit_geodesic_trace(w, sphere: SphereGrid, tol_fit=1e-8) -> TraceFit:
    """Decide whether a boundary trace belongs to a totally geodesic slice.

    Minimizes over w0 the relative L2 distance of cos(w + w0) to the span of
    the degree-one harmonics.  The objective is pi-periodic in w0 (w0 + pi
    flips the sign of the fitted coefficients and names the same slice), so
    the search runs over [0, pi): a golden-section pass followed by a
    parabolic refinement; the verdict is "geodesic" iff the residual falls
    below tol_fit and the fitted coefficient norm is < 1.
    """
    w = np.asarray(w, dtype=float)
    basis = _degree_one_basis(sphere)
    scale2 = float(sphere.integrate(np.ones(sphere.shape)))

    if float(np.max(w) - np.min(w)) < 1e-13:
        # constant trace: any w0 fits; canonical choice makes f vanish
        w0 = float(math.pi / 2.0 - float(np.mean(w))) % math.pi
        zeros = [0.0] * 3
        return TraceFit(*zeros, w0=w0, residual=0.0, geodesic=True,
                        constant_trace=True)

    def objective(w0):
        f = np.cos(w + w0)
        denom = max(float(sphere.integrate(f * f)), 1e-30 * scale2)
        r2, _ = _projection_residual2(sphere, f, basis)
        return r2 / denom

    # golden-section on [0, pi)
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, math.pi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(90):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = objective(d)
    w0 = 0.5 * (a + b)
    # parabolic refinement
    h = max(1e-7, (b - a))
    f0, fp, fm = objective(w0), objective(w0 + h), objective(w0 - h)
    denom = fp - 2.0 * f0 + fm
    if denom > 0:
        w0 = w0 - 0.5 * h * (fp - fm) / denom
    w0 = w0 % math.pi

    f = np.cos(w + w0)
    denom = max(float(sphere.integrate(f * f)), 1e-30 * scale2)
    r2, coeffs = _projection_residual2(sphere, f, basis)
    residual = math.sqrt(max(r2, 0.0) / denom)
    if sphere.kind == "fourier":
        A, B, C = coeffs[0], coeffs[1], 0.0
    elif sphere.kind == "axisym":
        A, B, C = 0.0, 0.0, coeffs[0]
    else:
        A, B, C = coeffs
    norm2 = A * A + B * B + C * C
    return TraceFit(A=float(A), B=float(B), C=float(C), w0=float(w0),
                    residual=residual,
                    geodesic=bool(residual < tol_fit and norm2 < 1.0))


@dataclass
class ConstancyReport:
    w0: float
    values: np.ndarray          # f^2 + |grad_S f|^2 on the sphere
    mean: float
    max_deviation: float
    fitted_norm2: float         # A^2 + B^2 + C^2 of the trace fit


def trace_constancy_check(w, sphere: SphereGrid) -> ConstancyReport:
    """Constancy of f^2 + |grad_S f|^2 for f = cos(w + w0) at the fitted w0.

    For the trace of a totally geodesic slice on S^2 the combination is the
    constant A^2 + B^2 + C^2; any higher-harmonic content shows up as an
    order-one deviation.  Defined on S^2 (full sphere grids) only.
    """
    if sphere.kind != "full":
        raise ConfigError("the constancy check is defined on full S^2 grids")
    fit = fit_geodesic_trace(w, sphere)
    f = np.cos(np.asarray(w, dtype=float) + fit.w0)
    ft = sphere.dtheta(f)
    fp = sphere.dphi(f) / sphere.sin_theta[:, None]
    vals = f * f + ft * ft + fp * fp
    mean = float(sphere.mean(vals))
    dev = float(np.max(np.abs(vals - mean)))
    return ConstancyReport(w0=fit.w0, values=vals, mean=mean,
                           max_deviation=dev,
                           fitted_norm2=fit.A ** 2 + fit.B ** 2 + fit.C ** 2)
