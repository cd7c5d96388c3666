"""Euclidean differential operators on ball grids.

Radial derivatives use fourth-order stencils along diameters (ghost rings
through the pole, Fornberg-shifted rows against the boundary); angular
derivatives are spectral.  Vector fields are handled in the orthonormal
polar frame (e_r, e_theta[, e_phi]).

Divergences are evaluated in the "meridian form"

    div0(V) = d/dr(V_r) + (1/r) [ (n-1) V_r + (1/sin t) d/dt (sin t V_t)
                                  + (1/sin t) d/dp (V_p) ],

in which the 1/r factor only multiplies spectrally differentiated angular
terms plus the smooth remainder of radial stencils, so the truncation error
stays uniformly high-order through the pole (a naive flux or pointwise polar
form loses an order per 1/r there).  Radial differentiation of V_r uses
sign-flipped ghosts, because e_r reverses across the pole.

The same `d1` tables and angular bracket are reused verbatim by the
linearized operator, the nonlinear residual, its Jacobian, and the
mode-space solver assembly, which is what makes the discrete
"linearization at zero equals the linear operator" identity exact.
"""

from __future__ import annotations

import numpy as np

from .errors import GridMismatch
from .fields import ScalarField

__all__ = [
    "gradient", "gradient_cartesian", "angular_bracket",
    "divergence", "laplacian", "radial_derivative", "sphere_laplacian",
]


def radial_derivative(f: ScalarField, stencil="boundary"):
    """d/dr at the cell centers; `stencil="interior"` ignores the boundary ring."""
    return f.grid.d1(f.padded(), stencil=stencil)


def gradient(f: ScalarField, stencil="boundary"):
    """Orthonormal-frame gradient components at the interior nodes.

    Returns (g_r, g_t) on disks and axisymmetric grids, (g_r, g_t, g_p) on
    full ball grids, with g_t = (1/r) du/dtheta, g_p = (1/(r sin t)) du/dphi.
    """
    grid = f.grid
    sph = grid.sphere
    gr = grid.d1(f.padded(), stencil=stencil)
    inv_r = grid.rad(1.0 / grid.r)
    gt = inv_r * sph.dtheta(f.interior)
    if sph.kind == "full":
        gp = inv_r / sph.sin_theta[None, :, None] * sph.dphi(f.interior)
        return gr, gt, gp
    return gr, gt


def gradient_cartesian(f: ScalarField, stencil="boundary"):
    """Cartesian gradient components; needs a grid that can represent them
    (n = 2 disk or full ball; an axisymmetric field's gradient is not
    axisymmetric component-wise)."""
    grid = f.grid
    sph = grid.sphere
    comps = gradient(f, stencil=stencil)
    if grid.n == 2:
        gr, gt = comps
        ct, st = np.cos(sph.theta), np.sin(sph.theta)
        return gr * ct - gt * st, gr * st + gt * ct
    if sph.kind != "full":
        raise GridMismatch("cartesian gradient of an axisymmetric field needs a full grid")
    gr, gt, gp = comps
    st = sph.sin_theta[None, :, None]
    ct = np.cos(sph.theta)[None, :, None]
    cp = np.cos(sph.phi)[None, None, :]
    sp = np.sin(sph.phi)[None, None, :]
    gx = gr * st * cp + gt * ct * cp - gp * sp
    gy = gr * st * sp + gt * ct * sp + gp * cp
    gz = gr * ct - gt * st
    return gx, gy, gz


def angular_bracket(grid, vt, vp=None):
    """(1/sin t) d/dt (sin t vt) [+ (1/sin t) d/dp (vp)] at interior nodes;
    plain d/dt (vt) on the disk."""
    sph = grid.sphere
    if sph.kind == "fourier":
        return sph.dtheta(vt)
    st = sph.sin_theta[None, :] if sph.kind == "axisym" else sph.sin_theta[None, :, None]
    out = sph.dtheta(st * vt) / st
    if sph.kind == "full" and vp is not None:
        out = out + sph.dphi(vp) / st
    return out


def divergence(grid, vr, vt, vp=None, vr_boundary=None):
    """Euclidean divergence of an orthonormal-component vector field.

    vr is differentiated radially with vector ghosts; when its boundary-ring
    values are unknown (the usual case for derived fields) the outer rows
    fall back to interior-only stencils.
    """
    if vr_boundary is None:
        dvr = grid.d1(grid.pad(vr, ghost_sign=-1.0), stencil="interior")
    else:
        dvr = grid.d1(grid.pad(vr, vr_boundary, ghost_sign=-1.0), stencil="boundary")
    inv_r = grid.rad(1.0 / grid.r)
    return dvr + inv_r * ((grid.n - 1) * vr + angular_bracket(grid, vt, vp))


def laplacian(f: ScalarField):
    """Euclidean Laplacian at the interior nodes.

    Radial part by centered stencils on the gradient flux, angular part by
    the grid's masked spectral multiplier (uniformly accurate at the pole).
    """
    grid = f.grid
    ur = grid.d1(f.padded(), stencil="boundary")
    dur = grid.d1(grid.pad(ur, ghost_sign=-1.0), stencil="interior")
    inv_r = grid.rad(1.0 / grid.r)
    return dur + inv_r * ((grid.n - 1) * ur) + inv_r ** 2 * grid.lap_sphere(f.interior)


def sphere_laplacian(g, sphere):
    """Laplace-Beltrami of boundary samples on S^{n-1} (spectral multiplier)."""
    return sphere.lap(np.asarray(g, dtype=float))
