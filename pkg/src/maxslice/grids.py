"""Grids over the unit ball and spectral machinery on its boundary sphere.

Radial direction: an offset grid r_i = (i + 1/2) dr, i = 0..nr-1 with
dr = 1/nr, plus a Dirichlet boundary ring at r = 1 exactly.  The cell faces
sit at R_k = k dr, so the innermost face is r = 0 (where every radial flux
vanishes identically) and the outermost face coincides with the boundary
ring.  Stencils that reach past the center use ghost rings filled by the
angular antipodal map (theta -> pi - theta, phi -> phi + pi), the standard
offset-grid pole closure.

Angular direction: trigonometric (FFT) modes on the circle for n = 2;
Gauss-Legendre colatitude nodes for n = 3, either alone (axisymmetric mode)
or crossed with an equispaced azimuth (full mode).  All angular derivatives
are spectral.  Mode tables (eigenvalue mu of the negative angular Laplacian
and antipodal parity) are exposed so a solver can decouple the radial
systems per angular mode with stencils identical to the physical-space
application.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError

__all__ = ["SphereGrid", "Grid", "fd_weights"]


def fd_weights(x0, xs, m):
    """Finite-difference weights for the m-th derivative at x0 on nodes xs.

    Classic recursive computation; exact for polynomials of degree
    len(xs) - 1, so len(xs) nodes give order len(xs) - m accuracy.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _is_pow2(k):
    return k >= 2 and (k & (k - 1)) == 0


def _norm_assoc_legendre(lmax, m, x):
    """Normalized associated Legendre functions on nodes x.

    Returns array (lmax - m + 1, len(x)) of Pbar_l^m, l = m..lmax, with
    int_{-1}^{1} Pbar_l^m(x)^2 dx = 1 (no Condon-Shortley phase).
    """
    x = np.asarray(x, dtype=float)
    s2 = np.clip(1.0 - x * x, 0.0, None)
    out = np.zeros((lmax - m + 1, x.size))
    # seed Pbar_m^m = c_m (1-x^2)^{m/2}
    c = math.sqrt(0.5)
    for k in range(1, m + 1):
        c *= math.sqrt((2 * k + 1) / (2.0 * k))
    out[0] = c * s2 ** (m / 2.0)
    if lmax == m:
        return out
    out[1] = math.sqrt(2 * m + 3.0) * x * out[0]
    for l in range(m + 2, lmax + 1):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
        out[l - m] = a * (x * out[l - m - 1] - b * out[l - m - 2])
    return out


def _assoc_legendre_dtheta(lmax, m, pbar_mm1, pbar_mp1, nx):
    """d/dtheta of the normalized associated Legendre functions.

    Uses the order-ladder identity (cancellation-free near the poles, unlike
    recurrences that divide by sin theta):

        dPbar_l^m/dtheta = [ sqrt((l+m)(l-m+1)) Pbar_l^{m-1}
                             - sqrt((l-m)(l+m+1)) Pbar_l^{m+1} ] / 2,

    with the m = 0 case reducing to -sqrt(l(l+1)) Pbar_l^1.
    """
    out = np.zeros((lmax - m + 1, nx))
    for l in range(m, lmax + 1):
        if m == 0:
            if l >= 1:
                out[l] = -math.sqrt(l * (l + 1.0)) * pbar_mp1[l - 1]
            continue
        acc = 0.5 * math.sqrt((l + m) * (l - m + 1.0)) * pbar_mm1[l - (m - 1)]
        if l >= m + 1 and pbar_mp1 is not None:
            acc = acc - 0.5 * math.sqrt((l - m) * (l + m + 1.0)) * pbar_mp1[l - (m + 1)]
        out[l - m] = acc
    return out


class SphereGrid:
    """Angular grid on S^{n-1} with spectral transforms.

    kind:
      - "fourier": n = 2 circle, ntheta equispaced nodes (power of two).
      - "axisym":  n = 3, Gauss-Legendre colatitude nodes only.
      - "full":    n = 3, Gauss-Legendre colatitude x equispaced azimuth
                   (nphi a power of two).

    Value arrays carry the angular axes last: (..., ntheta) or
    (..., ntheta, nphi).
    """

    def __init__(self, kind, ntheta, nphi=0):
        if kind not in ("fourier", "axisym", "full"):
            raise ConfigError(f"unknown sphere kind {kind!r}")
        self.kind = kind
        self.ntheta = int(ntheta)
        self.nphi = int(nphi)
        if kind == "fourier":
            if not _is_pow2(self.ntheta):
                raise ConfigError("fourier node count must be a power of two >= 2")
            self.theta = 2.0 * np.pi * np.arange(self.ntheta) / self.ntheta
            self.shape = (self.ntheta,)
            self.nmodes = self.ntheta // 2 + 1
            k = np.arange(self.nmodes)
            self._dmult = 1j * k
            self._dmult[-1] = 0.0  # Nyquist derivative zeroed
            self.mode_mu = (k * k).astype(float)
            self.mode_mu[-1] = 0.0  # matches the composed-derivative path
            self.mode_parity = np.where(k % 2 == 0, 1.0, -1.0)
            self.mode_degree = k.astype(float)
            self.quad_weight = 2.0 * np.pi / self.ntheta
        else:
            if self.ntheta < 4:
                raise ConfigError("need at least 4 colatitude nodes")
            xs, ws = np.polynomial.legendre.leggauss(self.ntheta)
            order = np.argsort(-xs)  # x descending <=> theta ascending
            self.x = xs[order]
            self.glw = ws[order]
            self.theta = np.arccos(self.x)
            self.sin_theta = np.sqrt(np.clip(1.0 - self.x * self.x, 0.0, None))
            lmax = self.ntheta - 1
            self.lmax = lmax
            if kind == "axisym":
                if nphi:
                    raise ConfigError("axisym grids carry no azimuth nodes")
                self.shape = (self.ntheta,)
                pb = _norm_assoc_legendre(lmax, 0, self.x)
                pb1 = _norm_assoc_legendre(lmax, 1, self.x)
                self._pbar = {0: pb}
                self._dpbar = {0: _assoc_legendre_dtheta(lmax, 0, None, pb1, self.ntheta)}
                self._an = {0: pb * self.glw}
                self.nmodes = self.ntheta
                ls = np.arange(self.ntheta, dtype=float)
                self.mode_mu = ls * (ls + 1.0)
                self.mode_parity = np.where(np.arange(self.ntheta) % 2 == 0, 1.0, -1.0)
                self.mode_degree = ls
            else:
                if not _is_pow2(self.nphi):
                    raise ConfigError("azimuth node count must be a power of two")
                self.phi = 2.0 * np.pi * np.arange(self.nphi) / self.nphi
                self.shape = (self.ntheta, self.nphi)
                # azimuthal modes beyond the colatitude band limit are not
                # representable; they are projected out by the transforms
                self.mphi = min(self.nphi // 2, lmax)
                pbar_all = {m: _norm_assoc_legendre(lmax, m, self.x)
                            for m in range(min(self.mphi + 1, lmax) + 1)}
                self._pbar, self._dpbar, self._an = {}, {}, {}
                mus, pars, self._mode_m, self._mode_l = [], [], [], []
                for m in range(self.mphi + 1):
                    pb = pbar_all[m]
                    self._pbar[m] = pb
                    self._dpbar[m] = _assoc_legendre_dtheta(
                        lmax, m, pbar_all.get(m - 1), pbar_all.get(m + 1), self.ntheta)
                    self._an[m] = pb * self.glw
                    for l in range(m, lmax + 1):
                        mus.append(l * (l + 1.0))
                        pars.append(1.0 if l % 2 == 0 else -1.0)
                        self._mode_m.append(m)
                        self._mode_l.append(l)
                self.mode_mu = np.array(mus)
                self.mode_parity = np.array(pars)
                self.mode_degree = np.array(self._mode_l, dtype=float)
                self.nmodes = self.mode_mu.size
                mphi_k = np.arange(self.nphi // 2 + 1)
                self._phimult = 1j * mphi_k
                self._phimult[-1] = 0.0

    # ---- quadrature ----

    def integrate(self, v):
        """Integral over the sphere (or circle) with its round measure."""
        v = np.asarray(v)
        if self.kind == "fourier":
            return v.sum(axis=-1) * self.quad_weight
        if self.kind == "axisym":
            return 2.0 * np.pi * (v * self.glw).sum(axis=-1)
        return (2.0 * np.pi / self.nphi) * np.einsum("...tp,t->...", v, self.glw)

    @property
    def area(self):
        return 2.0 * np.pi if self.kind == "fourier" else 4.0 * np.pi

    def mean(self, v):
        return self.integrate(v) / self.area

    # ---- transforms ----

    def to_modes(self, v):
        """Forward transform; returns (..., nmodes) (complex except axisym)."""
        v = np.asarray(v)
        if self.kind == "fourier":
            return np.fft.rfft(v, axis=-1)
        if self.kind == "axisym":
            return v @ self._an[0].T
        f = np.fft.rfft(v, axis=-1)  # (..., ntheta, mphi+1)
        blocks = [f[..., :, m] @ self._an[m].T for m in range(self.mphi + 1)]
        return np.concatenate(blocks, axis=-1)

    def from_modes(self, c):
        """Inverse of to_modes."""
        c = np.asarray(c)
        if self.kind == "fourier":
            return np.fft.irfft(c, n=self.ntheta, axis=-1)
        if self.kind == "axisym":
            return np.real(c) @ self._pbar[0] if np.iscomplexobj(c) else c @ self._pbar[0]
        f = np.zeros(c.shape[:-1] + (self.ntheta, self.nphi // 2 + 1), dtype=complex)
        pos = 0
        for m in range(self.mphi + 1):
            nl = self.lmax + 1 - m
            f[..., :, m] = c[..., pos:pos + nl] @ self._pbar[m]
            pos += nl
        return np.fft.irfft(f, n=self.nphi, axis=-1)

    # ---- derivatives ----

    def _demean(self, v):
        """Subtract the spherical mean (exact kernel of all derivatives).

        The Legendre quadrature of a constant is only zero to roundoff in the
        nonconstant coefficients; removing the mean first keeps that noise
        from being amplified by 1/r factors at the pole rings downstream.
        """
        if self.kind == "fourier":
            return v                     # FFT annihilates constants exactly
        return v - self.mean(v)[..., None] if self.kind == "axisym" \
            else v - self.mean(v)[..., None, None]

    def dtheta(self, v):
        """Spectral d/dtheta (for "fourier" grids theta is the circle angle
        and this is the circle derivative)."""
        v = np.asarray(v)
        if self.kind == "fourier":
            return np.fft.irfft(self._dmult * np.fft.rfft(v, axis=-1), n=self.ntheta, axis=-1)
        v = self._demean(v)
        if self.kind == "axisym":
            return (v @ self._an[0].T) @ self._dpbar[0]
        f = np.fft.rfft(v, axis=-1)
        out = np.zeros_like(f)
        for m in range(self.mphi + 1):
            out[..., :, m] = (f[..., :, m] @ self._an[m].T) @ self._dpbar[m]
        return np.fft.irfft(out, n=self.nphi, axis=-1)

    def dphi(self, v):
        """Spectral d/dphi (zero for axisym fields; circle derivative alias for n=2)."""
        v = np.asarray(v)
        if self.kind == "fourier":
            return self.dtheta(v)
        if self.kind == "axisym":
            return np.zeros_like(v)
        return np.fft.irfft(self._phimult * np.fft.rfft(v, axis=-1), n=self.nphi, axis=-1)

    def lap(self, v):
        """Laplace-Beltrami on the boundary sphere, as a spectral multiplier."""
        v = self._demean(np.asarray(v, dtype=float))
        return self.from_modes(self.to_modes(v) * (-self.mode_mu))

    # ---- symmetry ----

    def antipodal(self, v):
        """Values at the antipodal angular nodes (exact node-to-node map)."""
        v = np.asarray(v)
        if self.kind == "fourier":
            return np.roll(v, self.ntheta // 2, axis=-1)
        if self.kind == "axisym":
            return v[..., ::-1]
        return np.roll(v[..., ::-1, :], self.nphi // 2, axis=-1)


class Grid:
    """Volume grid on the unit ball: offset radial nodes x angular nodes.

    n = 2 uses kind "fourier" angular nodes; n = 3 either "axisym" or
    "full".  Interior field arrays have shape (nr, *sphere.shape); the
    boundary ring holds one value per angular node.
    """

    def __init__(self, n, nr, ntheta, nphi=0, mode=None):
        if n not in (2, 3):
            raise ConfigError("dimension must be 2 or 3")
        if nr < 8:
            raise ConfigError("need at least 8 radial cells")
        self.n = int(n)
        self.nr = int(nr)
        if n == 2:
            if mode not in (None, "full", "disk"):
                raise ConfigError("n = 2 grids have a single (full) mode")
            self.mode = "full"
            self.sphere = SphereGrid("fourier", ntheta)
        else:
            mode = mode or ("full" if nphi else "axisym")
            if mode == "axisym":
                self.sphere = SphereGrid("axisym", ntheta)
            elif mode == "full":
                self.sphere = SphereGrid("full", ntheta, nphi)
            else:
                raise ConfigError(f"unknown grid mode {mode!r}")
            self.mode = mode
        self.dr = 1.0 / self.nr
        self.r = (np.arange(self.nr) + 0.5) * self.dr
        self.r_faces = np.arange(self.nr + 1) * self.dr        # R_nr = 1 exactly
        self.tau = 0.5 * (1.0 - self.r ** 2)
        # drift coefficient of the linearized operator: tau (n-2 + 2/(1-tau)) r
        self.c_drift = self.tau * (self.n - 2 + 2.0 / (1.0 - self.tau)) * self.r
        # regularity mask: a smooth field's mode of angular degree d carries
        # r^d toward the center, so modes with r_i^d below the double floor
        # hold no information at ring i and only amplify transform roundoff
        # through the 1/r^2 angular weight; they are dropped ring by ring.
        cutoff = -math.log(1e-18)
        self.mode_mask = (self.sphere.mode_degree[None, :]
                          * (-np.log(self.r))[:, None] <= cutoff).astype(float)
        self._build_radial_tables()
        self._cache = {}

    # ---- shapes and padding ----

    @property
    def ang_shape(self):
        return self.sphere.shape

    @property
    def shape(self):
        return (self.nr,) + self.sphere.shape

    def rad(self, arr):
        """Reshape a per-ring array for broadcasting over angular axes."""
        return np.asarray(arr).reshape((-1,) + (1,) * len(self.sphere.shape))

    def pad(self, interior, boundary=None, ghost_sign=1.0):
        """Stack [ghost(-3dr/2), ghost(-dr/2), rings..., boundary].

        Ghost rows continue the field through the pole along diameters: the
        value at signed radius -r in direction omega is ghost_sign times the
        value at +r in the antipodal direction.  Scalars use ghost_sign = +1;
        radial and colatitude vector components flip (-1), since the
        orthonormal frame vectors e_r, e_theta reverse across the pole.
        Row p sits at signed radius (p - 3/2) dr for p < 2, at r_{p-2} for
        2 <= p < nr + 2, and at r = 1 for p = nr + 2.
        """
        anti = self.sphere.antipodal
        if boundary is None:
            boundary = np.zeros(self.sphere.shape)
        return np.concatenate([
            ghost_sign * anti(interior[1])[None], ghost_sign * anti(interior[0])[None],
            interior, np.asarray(boundary)[None]], axis=0)

    # ---- radial stencils ----

    def _build_radial_tables(self):
        nr, dr = self.nr, self.dr
        pos = np.concatenate([[-1.5 * dr, -0.5 * dr], self.r, [1.0]])  # padded positions

        def build(use_boundary):
            cols = np.zeros((nr, 5), dtype=int)
            wts = np.zeros((nr, 5))
            for i in range(nr):
                p = i + 2
                if i <= 1:
                    sel = np.arange(p - 2, p + 3)
                elif i <= nr - 3:
                    sel = np.arange(p - 2, p + 3)
                elif use_boundary:
                    if i == nr - 2:
                        sel = np.arange(p - 2, p + 3)           # reaches the ring
                    else:                                        # i = nr-1: 4 nodes
                        sel = np.arange(p - 2, p + 2)
                else:
                    sel = np.arange(nr - 3, nr + 2)              # last 5 interior rings
                w = fd_weights(pos[p], pos[sel], 1)
                cols[i, :sel.size] = sel
                wts[i, :sel.size] = w
            return cols, wts

        self._d1b_cols, self._d1b_wts = build(True)
        self._d1i_cols, self._d1i_wts = build(False)

    def d1(self, padded, stencil="boundary"):
        """Fourth-order radial derivative at the cell centers from a padded stack."""
        cols, wts = ((self._d1b_cols, self._d1b_wts) if stencil == "boundary"
                     else (self._d1i_cols, self._d1i_wts))
        gathered = padded[cols]                     # (nr, 5, *ang)
        w = wts.reshape(wts.shape + (1,) * len(self.sphere.shape))
        return (gathered * w).sum(axis=1)

    def lap_sphere(self, values):
        """Per-ring spherical Laplacian as a regularized spectral multiplier.

        Applies -mu with the ring-wise regularity mask; this is the only form
        whose roundoff survives the 1/r^2 weight at the innermost rings.
        """
        sph = self.sphere
        c = sph.to_modes(sph._demean(values))
        return sph.from_modes(c * (-sph.mode_mu * self.mode_mask))

    def dtheta_reg(self, values):
        """d/dtheta with the ring-wise regularity mask (single transform pass).

        Matches the masked Laplacian structurally: a mode dropped there is
        dropped here too, so the nonlinear terms built from these derivatives
        act only on the subspace the solvers see.
        """
        sph = self.sphere
        if sph.kind == "fourier":
            c = np.fft.rfft(values, axis=-1) * self.mode_mask
            return np.fft.irfft(sph._dmult * c, n=sph.ntheta, axis=-1)
        if sph.kind == "axisym":
            c = (sph._demean(values) @ sph._an[0].T) * self.mode_mask
            return c @ sph._dpbar[0]
        f = np.fft.rfft(sph._demean(values), axis=-1)
        out = np.zeros_like(f)
        pos = 0
        for m in range(sph.mphi + 1):
            nl = sph.lmax + 1 - m
            cm = (f[..., :, m] @ sph._an[m].T) * self.mode_mask[:, pos:pos + nl]
            out[..., :, m] = cm @ sph._dpbar[m]
            pos += nl
        return np.fft.irfft(out, n=sph.nphi, axis=-1)

    def dphi_reg(self, values):
        """d/dphi with the ring-wise regularity mask (full grids; zero on
        axisymmetric ones, circle derivative on disks)."""
        sph = self.sphere
        if sph.kind == "fourier":
            return self.dtheta_reg(values)
        if sph.kind == "axisym":
            return np.zeros_like(values)
        f = np.fft.rfft(sph._demean(values), axis=-1)
        out = np.zeros_like(f)
        pos = 0
        for m in range(sph.mphi + 1):
            nl = sph.lmax + 1 - m
            cm = (f[..., :, m] @ sph._an[m].T) * self.mode_mask[:, pos:pos + nl]
            out[..., :, m] = sph._phimult[m] * (cm @ sph._pbar[m])
            pos += nl
        return np.fft.irfft(out, n=sph.nphi, axis=-1)

    def d1_matrices(self, stencil="boundary"):
        """The radial derivative as dense maps for mode-space assembly.

        Returns (Mint, mb, g0, g1): interior part (nr x nr), boundary column
        (nr,), and the ghost columns hitting rings 0 and 1 (to be folded with
        the mode parity and the ghost sign).
        """
        cols, wts = ((self._d1b_cols, self._d1b_wts) if stencil == "boundary"
                     else (self._d1i_cols, self._d1i_wts))
        nr = self.nr
        mint = np.zeros((nr, nr))
        mb = np.zeros(nr)
        g0 = np.zeros(nr)
        g1 = np.zeros(nr)
        for i in range(nr):
            for c, w in zip(cols[i], wts[i]):
                if w == 0.0 and c == 0:
                    continue
                if c == 0:
                    g1[i] += w          # padded row 0 = ghost of ring 1
                elif c == 1:
                    g0[i] += w          # padded row 1 = ghost of ring 0
                elif c == nr + 2:
                    mb[i] += w
                else:
                    mint[i, c - 2] += w
        return mint, mb, g0, g1

    # ---- comparisons ----

    def compatible(self, other):
        return (isinstance(other, Grid) and other.n == self.n and other.mode == self.mode
                and other.nr == self.nr and other.sphere.shape == self.sphere.shape)

    def label(self):
        if self.mode == "full" and self.n == 3:
            return f"{self.nr}x{self.sphere.ntheta}x{self.sphere.nphi}"
        return f"{self.nr}x{self.sphere.ntheta}"
