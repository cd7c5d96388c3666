"""Shared evaluation kernel for the slice operators.

Everything the solvers need is one family of degenerate-elliptic operators
on height fields u over the ball:

    T_eps(u) = tau^2 div0( W grad0 u ) + tau (n-2 + 2/(1-tau)) W (r du/dr),
    W = (1 - eps q)^(-1/2),   q = (1-tau)^2 |grad0 u|^2,

where grad0/div0 are Euclidean and q < 1 is the spacelike condition of the
graph.  eps = 1 is the maximal-slice residual; general eps > 0 is the scaled
family whose solutions, multiplied by sqrt(eps), solve the eps = 1 equation;
eps = 0 reduces W to exactly 1.0 and T_0 is the linearized operator at the
trivial slice.

The divergence is evaluated in the expanded form

    div0(W grad0 u) = d/dr(W u_r) + (n-1)/r (W u_r)
                      + (1/r^2) [ W Lap_S u + (eps/2) W^3 grad_S q . grad_S u ],

with Lap_S the masked spectral multiplier of the grid (see Grid.lap_sphere)
and grad_S q . grad_S u = q_t u_t + q_p u_p / sin^2 t.  Radial derivatives of
the flux use sign-flipped pole ghosts.  The directional derivative reuses
every discrete ingredient, so the identity "Jacobian at u = 0 equals the
linearized operator" holds to the last bit, and scaling a field by an exact
power of two commutes with the whole evaluation bit-for-bit (which makes the
sqrt(eps)-scaling identity exact for dyadic eps).
"""

from __future__ import annotations

import numpy as np

from .errors import NonSpacelikeField
from .fields import ScalarField

__all__ = ["SliceKernel"]


class SliceKernel:
    """Operator family T_eps on one grid; instances are stateless and cheap."""

    def __init__(self, grid, eps=1.0):
        if eps < 0:
            raise ValueError("eps must be >= 0")
        self.grid = grid
        self.eps = float(eps)

    def _derivs(self, interior, boundary):
        """(u_r, u_t, u_p): coordinate derivatives, angular ones masked."""
        grid = self.grid
        ur = grid.d1(grid.pad(interior, boundary), stencil="boundary")
        ut = grid.dtheta_reg(interior)
        up = grid.dphi_reg(interior) if grid.sphere.kind == "full" else None
        return ur, ut, up

    def state(self, u: ScalarField, margin=0.0):
        """Precompute the u-dependent data shared by residual and Jacobian.

        Raises NonSpacelikeField when q exceeds 1 - margin anywhere (with
        margin = 0 only the hard light-cone bound eps*q < 1 is enforced).
        """
        grid = self.grid
        sph = grid.sphere
        inv_r = grid.rad(1.0 / grid.r)
        ur, ut, up = self._derivs(u.interior, u.boundary)
        grad2 = ur * ur + (ut * inv_r) ** 2
        if up is not None:
            grad2 = grad2 + (up * inv_r / sph.sin_theta[None, :, None]) ** 2
        one_m_tau = grid.rad(1.0 - grid.tau)
        q = one_m_tau ** 2 * grad2
        qmax = float(q.max())
        if margin > 0.0 and qmax >= 1.0 - margin:
            raise NonSpacelikeField(
                f"max (1-tau)^2 |grad u|^2 = {qmax:.6f} >= {1.0 - margin}")
        if self.eps * qmax >= 1.0:
            raise NonSpacelikeField(
                f"eps * q = {self.eps * qmax:.6f} >= 1 (light cone reached)")
        W = 1.0 / np.sqrt(1.0 - self.eps * q)
        qt = grid.dtheta_reg(q)
        qp = grid.dphi_reg(q) if sph.kind == "full" else None
        lap_u = grid.lap_sphere(u.interior)
        return {"ur": ur, "ut": ut, "up": up, "q": q, "qt": qt, "qp": qp,
                "qmax": qmax, "W": W, "lap_u": lap_u}

    def _dvr(self, gr):
        """Radial derivative of a radial flux component (vector ghosts)."""
        grid = self.grid
        return grid.d1(grid.pad(gr, ghost_sign=-1.0), stencil="interior")

    def _inv_st2(self):
        sph = self.grid.sphere
        return 1.0 / sph.sin_theta[None, :, None] ** 2

    def residual(self, u: ScalarField, margin=0.0, state=None):
        """T_eps(u) at the interior nodes, returned as a ScalarField with a
        zero boundary row (no equation is imposed on the ring)."""
        grid = self.grid
        st = state or self.state(u, margin=margin)
        inv_r = grid.rad(1.0 / grid.r)
        W, ur = st["W"], st["ur"]
        gr = W * ur
        slope = st["qt"] * st["ut"]
        if st["up"] is not None:
            slope = slope + st["qp"] * st["up"] * self._inv_st2()
        ang = W * st["lap_u"] + (self.eps / 2.0) * W ** 3 * slope
        div = self._dvr(gr) + inv_r * ((grid.n - 1) * gr) + inv_r ** 2 * ang
        out = grid.rad(grid.tau ** 2) * div + grid.rad(grid.c_drift) * gr
        return ScalarField(grid, out)

    def jvp(self, u: ScalarField, v: ScalarField, margin=0.0, state=None):
        """Directional derivative dT_eps(u)[v]; v's boundary row is respected
        (use a zero trace for interior perturbations)."""
        grid = self.grid
        if not v.grid.compatible(grid):
            from .errors import GridMismatch
            raise GridMismatch("direction field lives on a different grid")
        sph = grid.sphere
        st = state or self.state(u, margin=margin)
        inv_r = grid.rad(1.0 / grid.r)
        one_m_tau = grid.rad(1.0 - grid.tau)
        W, ur, ut, up = st["W"], st["ur"], st["ut"], st["up"]
        vr, vt, vp = self._derivs(v.interior, v.boundary)
        dot = ur * vr + ut * vt * inv_r ** 2
        if vp is not None:
            dot = dot + up * vp * inv_r ** 2 * self._inv_st2()
        dq = 2.0 * (one_m_tau ** 2 * dot)
        dW = (self.eps / 2.0) * W ** 3 * dq
        gr_lin = W * vr + dW * ur
        lap_v = grid.lap_sphere(v.interior)
        dqt = grid.dtheta_reg(dq)
        slope = st["qt"] * ut
        dslope = dqt * ut + st["qt"] * vt
        if up is not None:
            dqp = grid.dphi_reg(dq)
            i2 = self._inv_st2()
            slope = slope + st["qp"] * up * i2
            dslope = dslope + (dqp * up + st["qp"] * vp) * i2
        ang = (dW * st["lap_u"] + W * lap_v
               + (self.eps / 2.0) * (3.0 * W ** 2 * dW * slope + W ** 3 * dslope))
        div = self._dvr(gr_lin) + inv_r * ((grid.n - 1) * gr_lin) + inv_r ** 2 * ang
        out = grid.rad(grid.tau ** 2) * div + grid.rad(grid.c_drift) * gr_lin
        return ScalarField(grid, out)
