"""The linearized slice operator: assembly, solution, corrector, barriers.

The operator is

    L u = tau^2 Lap0 u + tau (n-2 + 2/(1-tau)) sum_i x^i du/dx^i,

the linearization of the maximal-slice equation at the trivial (totally
geodesic) slice, written in the Euclidean form whose coefficients stay
bounded on the closed ball; the tau^2 degeneracy at the boundary is explicit
and benign.  Application reuses the shared kernel at eps = 0 (W identically
one), so the nonlinear Jacobian at zero coincides with `apply_linear`
bit-for-bit.

Because the coefficients depend on radius only, L decouples over angular
modes into banded radial systems, which are assembled from the *same*
stencil tables as the physical application and solved directly.  A
matrix-free BiCGStab (right-preconditioned by that direct solve) is kept for
parity with the nonlinear path, where the Jacobian no longer decouples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import lpmv

from .errors import ConfigError, GridMismatch, SolverDiverged
from .fields import ScalarField
from .grids import Grid
from .kernel import SliceKernel
from .operators import sphere_laplacian

__all__ = [
    "apply_linear", "solve_linear", "bicgstab", "BoundaryDatum",
    "boundary_corrector", "barrier_image", "barrier_check", "BarrierReport",
]


def apply_linear(f: ScalarField) -> ScalarField:
    """L f at the interior nodes (boundary row of the result is zero)."""
    return SliceKernel(f.grid, eps=0.0).residual(f)


class LinearOperator:
    """The linearized slice operator bound to one grid.

    Carries the degenerate coefficients explicitly: the principal weight
    a = tau^2 (positive inside, vanishing at the ring) and the radial drift
    b = tau (n - 2 + 2/(1 - tau)) r, bounded on the closed ball.  Rows are
    imposed at interior nodes only; the boundary ring is a pure Dirichlet
    mask.
    """

    def __init__(self, grid):
        self.grid = grid
        self.principal = grid.tau ** 2
        self.drift = grid.c_drift

    def apply(self, f: ScalarField) -> ScalarField:
        if not f.grid.compatible(self.grid):
            raise GridMismatch("field does not live on the operator's grid")
        return apply_linear(f)

    def solve(self, rhs, bdata, **kwargs) -> ScalarField:
        if isinstance(rhs, ScalarField) and not rhs.grid.compatible(self.grid):
            raise GridMismatch("source does not live on the operator's grid")
        return solve_linear(rhs, bdata, **kwargs)


# ---------------------------------------------------------------- assembly

def _banded_parts(grid):
    """Cache per grid: banded form of the mode-decoupled radial operator.

    Returns {parity: (lo, up, ab, bcol)} plus the diagonal angular weight
    tau^2/r^2; the mode system is ab with mu * weight subtracted from the
    main diagonal, and right-hand side eta_mode - bcol * boundary_mode.
    """
    key = "linear_bands"
    if key in grid._cache:
        return grid._cache[key]
    nr = grid.nr
    mb_int, mb_b, gb0, gb1 = grid.d1_matrices("boundary")
    mi_int, _, gi0, gi1 = grid.d1_matrices("interior")
    inv_r = 1.0 / grid.r
    tau2 = grid.tau ** 2
    out = {}
    for parity in (1.0, -1.0):
        d1b = mb_int.copy()
        d1b[:, 0] += parity * gb0
        d1b[:, 1] += parity * gb1
        d1i = mi_int.copy()
        d1i[:, 0] -= parity * gi0          # vector ghosts flip sign
        d1i[:, 1] -= parity * gi1
        div = d1i @ d1b + ((grid.n - 1) * inv_r)[:, None] * d1b
        bdiv = d1i @ mb_b + (grid.n - 1) * inv_r * mb_b
        a = tau2[:, None] * div + grid.c_drift[:, None] * d1b
        bcol = tau2 * bdiv + grid.c_drift * mb_b
        nz = np.nonzero(a)
        lo = int(np.max(nz[0] - nz[1]))
        up = int(np.max(nz[1] - nz[0]))
        ab = np.zeros((lo + up + 1, nr))
        for j in range(nr):
            i0, i1 = max(0, j - up), min(nr, j + lo + 1)
            ab[up + np.arange(i0, i1) - j, j] = a[i0:i1, j]
        out[parity] = (lo, up, ab, bcol)
    grid._cache[key] = (out, tau2 * inv_r ** 2)
    return grid._cache[key]


def _solve_modes(grid, rhs_int, bdata_samples):
    """Direct solve of L u = rhs with Dirichlet trace, per angular mode."""
    sph = grid.sphere
    parts, diag_ang = _banded_parts(grid)
    rhs_m = sph.to_modes(rhs_int)              # (nr, nmodes)
    b_m = sph.to_modes(bdata_samples)          # (nmodes,)
    sol_m = np.zeros_like(rhs_m)
    for j in range(sph.nmodes):
        lo, up, ab0, bcol = parts[sph.mode_parity[j]]
        ab = ab0.copy()
        ab[up, :] -= sph.mode_mu[j] * diag_ang * grid.mode_mask[:, j]
        rhs = rhs_m[:, j] - bcol * b_m[j]
        sol_m[:, j] = solve_banded((lo, up), ab, rhs)
    return sph.from_modes(sol_m)


def _l2(grid, arr):
    """Volume-weighted discrete L2 norm over interior nodes."""
    w_r = grid.r ** (grid.n - 1)
    sq = np.abs(arr) ** 2
    per_ring = grid.sphere.integrate(sq)
    return math.sqrt(float(np.sum(per_ring * w_r) * grid.dr))


def solve_linear(rhs, bdata, *, method="direct", rtol=1e-12, max_refine=3,
                 maxiter=400):
    """Solve L u = rhs in the ball, u = bdata on the boundary ring.

    rhs may be a ScalarField or an interior array; bdata a BoundaryDatum,
    samples array, or scalar.  The residual contract (relative L2 residual
    of the returned field under `apply_linear`) is enforced by defect
    correction; failure to reach ~1e-10 raises SolverDiverged.
    """
    if isinstance(rhs, ScalarField):
        grid, eta = rhs.grid, rhs.interior
    else:
        raise ConfigError("pass the source as a ScalarField (grid carrier)")
    samples = _resolve_bdata(bdata, grid)
    eta_norm = _l2(grid, eta)
    scale = eta_norm + _l2(grid, np.broadcast_to(samples, grid.shape)) + 1e-300

    if method == "direct":
        u = _solve_modes(grid, eta, samples)
        fld = ScalarField(grid, u, samples)
        for _ in range(max_refine):
            res = eta - apply_linear(fld).interior
            if _l2(grid, res) <= rtol * scale:
                break
            fld = ScalarField(grid, fld.interior + _solve_modes(
                grid, res, np.zeros(grid.sphere.shape)), samples)
        res_norm = _l2(grid, eta - apply_linear(fld).interior)
        if res_norm > 1e-9 * scale:
            raise SolverDiverged(f"direct mode solve stalled: relative L2 residual {res_norm/scale:.2e}")
        return fld

    if method == "krylov":
        lift = ScalarField(grid, np.zeros(grid.shape), samples)
        b = eta - apply_linear(lift).interior

        def matvec(x):
            f = ScalarField(grid, x.reshape(grid.shape))
            return apply_linear(f).interior.ravel()

        def precon(x):
            return _solve_modes(grid, x.reshape(grid.shape),
                                np.zeros(grid.sphere.shape)).ravel()

        x, _ = bicgstab(matvec, b.ravel(), precond=precon, rtol=rtol,
                        maxiter=maxiter)
        return ScalarField(grid, lift.interior + x.reshape(grid.shape), samples)

    raise ConfigError(f"unknown method {method!r}")


def bicgstab(matvec, b, precond=None, rtol=1e-12, atol=0.0, maxiter=400,
             accept_rtol=1e-8):
    """Right-preconditioned BiCGStab on flat arrays.

    Returns (x, matvec_count).  The iteration keeps the best iterate seen;
    when it stagnates at its rounding floor, or the budget runs out, the
    best iterate is accepted as long as its relative residual is below
    accept_rtol, otherwise SolverDiverged is raised.
    """
    if precond is None:
        precond = lambda z: z
    n = b.size
    x = np.zeros(n)
    r = b.copy()
    rhat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0
    threshold = max(rtol * bnorm, atol)
    nmv = 0
    rnorm = np.linalg.norm(r)
    best_x, best_norm = x.copy(), rnorm
    since_improve = 0

    def finish(reason):
        if best_norm <= max(accept_rtol * bnorm, threshold * 4):
            return best_x, nmv
        raise SolverDiverged(
            f"bicgstab {reason}: {nmv} products, residual {best_norm/bnorm:.2e} of rhs")

    while rnorm > threshold:
        if nmv >= maxiter:
            return finish("budget exhausted")
        if since_improve > 30:
            return finish("stagnated")
        rho_next = float(rhat @ r)
        if abs(rho_next) < 1e-300:
            return finish("breakdown (rho)")
        beta = (rho_next / rho) * (alpha / omega)
        rho = rho_next
        p = r + beta * (p - omega * v)
        phat = precond(p)
        v = matvec(phat)
        nmv += 1
        denom = float(rhat @ v)
        if abs(denom) < 1e-300:
            return finish("breakdown (rhat.v)")
        alpha = rho / denom
        s = r - alpha * v
        snorm = np.linalg.norm(s)
        if snorm <= threshold:
            x = x + alpha * phat
            rnorm = snorm
            if rnorm < best_norm:
                best_x, best_norm = x.copy(), rnorm
            break
        shat = precond(s)
        t = matvec(shat)
        nmv += 1
        tt = float(t @ t)
        if tt < 1e-300:
            return finish("breakdown (t)")
        omega = float(t @ s) / tt
        if omega == 0.0:
            return finish("stagnated (omega = 0)")
        x = x + alpha * phat + omega * shat
        r = s - omega * t
        rnorm = np.linalg.norm(r)
        if rnorm < 0.999 * best_norm:
            best_x, best_norm = x.copy(), rnorm
            since_improve = 0
        else:
            since_improve += 1
    return best_x, nmv


# ---------------------------------------------------------------- boundary data

@dataclass(frozen=True)
class BoundaryDatum:
    """Boundary function on S^{n-1}, in one of a few closed representations.

    kind "harmonic": data maps (l, m) -> coefficient.  On the disk the key
    (k, 0) means cos(k theta) and (k, 1) means sin(k theta).  On the sphere
    (l, 0) is the Legendre polynomial P_l(cos theta); (l, m) with m != 0 is
    the Schmidt seminormalized associated function times cos(m phi) for
    m > 0 and sin(|m| phi) for m < 0 (full grids only).
    kind "geodesic": data is a GeodesicSliceSpec; the trace of the exact
    totally geodesic slice.  kind "constant": data is the value.
    kind "samples": data is a raw node array for a known sphere layout.
    """

    kind: str
    data: object
    amplitude: float = 1.0

    @classmethod
    def harmonic(cls, coeffs, amplitude=1.0):
        return cls("harmonic", dict(coeffs), amplitude)

    @classmethod
    def constant(cls, c):
        return cls("constant", float(c))

    @classmethod
    def geodesic(cls, spec, amplitude=1.0):
        return cls("geodesic", spec, amplitude)

    @classmethod
    def from_string(cls, text):
        """Parse the CLI mini-language: `harmonic:l,m:coeff[;l,m:coeff...]`,
        `geodesic:A,B,C,w0`, or `constant:c`."""
        head, _, rest = text.partition(":")
        if head == "harmonic":
            coeffs = {}
            for chunk in rest.split(";"):
                lm, _, cval = chunk.rpartition(":")
                l_s, m_s = lm.split(",")
                coeffs[(int(l_s), int(m_s))] = float(cval)
            return cls.harmonic(coeffs)
        if head == "geodesic":
            from .geodesic import GeodesicSliceSpec
            a, b, c, w0 = (float(v) for v in rest.split(","))
            return cls.geodesic(GeodesicSliceSpec(a, b, c, w0))
        if head == "constant":
            return cls.constant(float(rest))
        raise ConfigError(f"cannot parse boundary datum {text!r}")

    def scaled(self, a):
        return BoundaryDatum(self.kind, self.data, self.amplitude * float(a))

    def resolve(self, sphere):
        """Samples on the given SphereGrid, times the amplitude."""
        if self.kind == "constant":
            return np.full(sphere.shape, self.data * self.amplitude)
        if self.kind == "samples":
            arr = np.asarray(self.data, dtype=float)
            if arr.shape != sphere.shape:
                raise GridMismatch("sample datum does not match the sphere grid")
            return self.amplitude * arr
        if self.kind == "geodesic":
            from .geodesic import boundary_trace
            w, _ = boundary_trace(self.data, sphere)
            return self.amplitude * w
        if self.kind == "harmonic":
            out = np.zeros(sphere.shape)
            for (l, m), c in self.data.items():
                if l > sphere.ntheta // 2:
                    raise ConfigError(
                        f"harmonic degree {l} exceeds half the angular "
                        f"resolution ({sphere.ntheta})")
                out += c * _harmonic_samples(sphere, l, m)
            return self.amplitude * out
        raise ConfigError(f"unknown datum kind {self.kind!r}")


def _harmonic_samples(sphere, l, m):
    if sphere.kind == "fourier":
        if m == 0:
            return np.cos(l * sphere.theta)
        if m == 1:
            return np.sin(l * sphere.theta)
        raise ConfigError("disk harmonics use m in {0 (cos), 1 (sin)}")
    if sphere.kind == "axisym":
        if m != 0:
            raise ConfigError("axisymmetric grids only resolve m = 0 harmonics")
        return np.polynomial.legendre.legval(sphere.x, [0.0] * l + [1.0])
    base = lpmv(abs(m), l, sphere.x)
    if m == 0:
        return np.broadcast_to(base[:, None], sphere.shape).copy()
    norm = math.sqrt(2.0 * math.factorial(l - abs(m)) / math.factorial(l + abs(m)))
    azim = np.cos(m * sphere.phi) if m > 0 else np.sin(-m * sphere.phi)
    return norm * base[:, None] * azim[None, :]


def _resolve_bdata(bdata, grid):
    if isinstance(bdata, BoundaryDatum):
        return bdata.resolve(grid.sphere)
    if np.isscalar(bdata):
        return np.full(grid.sphere.shape, float(bdata))
    arr = np.asarray(bdata, dtype=float)
    if arr.shape != grid.sphere.shape:
        raise GridMismatch("boundary samples do not match the grid")
    return arr


# ---------------------------------------------------------------- corrector

def _smoothstep(t):
    """Quintic transition: 1 for t <= 0, 0 for t >= 1, C^2 and gentle
    (max slope 15/8) in between."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    s = t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    return 1.0 - s


def boundary_corrector(bdata, grid, tau_blend=0.16, blend_width=0.25) -> ScalarField:
    """Near-boundary approximate solution of L u = 0 with trace bdata.

    Returns phi + rho^2 / (2 (n-1)) * Lap_S phi for tau <= tau_blend,
    blended smoothly into the constant angular mean over
    [tau_blend, tau_blend + blend_width].  The image under L of the returned
    field decays like tau^4 toward the boundary, which makes it the natural
    Newton seed; the wide, gentle blend keeps the seed's gradient small so
    even sizable boundary amplitudes start inside the spacelike cone.

    tau_blend sits a stencil-width above the tau <= 0.1 zone that the decay
    diagnostics fit, so the blend's finite smoothness never leaks into it.
    """
    phi = _resolve_bdata(bdata, grid)
    lap_phi = sphere_laplacian(phi, grid.sphere)
    mean = grid.sphere.mean(phi)
    rho = -np.log(grid.r)
    coef = 1.0 / (2.0 * (grid.n - 1))
    chi = _smoothstep((grid.tau - tau_blend) / blend_width)
    near = (phi[None] - mean) + coef * grid.rad(rho ** 2) * lap_phi[None]
    interior = mean + grid.rad(chi) * near
    return ScalarField(grid, interior, phi)


# ---------------------------------------------------------------- barriers

def barrier_image(s, grid):
    """Analytic image of the barrier tau^s under L, at the interior nodes.

    L(tau^s) = -s (2s - n + 2) tau^{s+1} + s (s - n - 1) tau^s
               + (2 s / (1 - tau)) tau^{s+1}.
    """
    tau, n = grid.tau, grid.n
    prof = (-s * (2 * s - n + 2) * tau ** (s + 1)
            + s * (s - n - 1) * tau ** s
            + 2.0 * s / (1.0 - tau) * tau ** (s + 1))
    return np.broadcast_to(grid.rad(prof), grid.shape).copy()


@dataclass
class BarrierReport:
    s: float
    delta: float                   # inf over nodes of -L(tau^s)/tau^s
    delta_boundary_limit: float    # s (n + 1 - s)
    delta_center_limit: float      # s n / 2
    positive: bool                 # barrier usable: 0 < s < n + 1
    source_bound: float | None = None      # M = sup tau^-s |eta|
    weighted_sup: float | None = None      # sup tau^-s |u|
    bound: float | None = None             # M / delta * (1 + tol)
    bound_ok: bool | None = None
    notes: list = field(default_factory=list)


def barrier_check(s, grid, solution=None, source=None, tol=0.05):
    """Barrier positivity and the weighted maximum-principle bound.

    delta = inf_nodes of -L(tau^s)/tau^s = s [(2s-n+2) tau + (n+1-s)
    - 2 tau/(1-tau)], evaluated analytically; for 0 < s < n+1 this is
    positive on (0, 1/2].  Outside that range the report flags delta as
    unusable instead of raising.  When a solved field and its source are
    supplied, checks sup tau^-s |u| <= M / delta * (1 + tol) with
    M = sup tau^-s |eta|.
    """
    s = float(s)
    n = grid.n
    tau = grid.tau
    ratio = s * ((2 * s - n + 2) * tau + (n + 1 - s) - 2 * tau / (1.0 - tau))
    delta = float(ratio.min())
    rep = BarrierReport(
        s=s,
        delta=delta,
        delta_boundary_limit=s * (n + 1 - s),
        delta_center_limit=s * n / 2.0,
        positive=(0.0 < s < n + 1 and delta > 0.0),
    )
    if not (0.0 < s < n + 1):
        rep.notes.append("s outside (0, n+1): barrier not coercive, delta flagged")
    if solution is not None and source is not None:
        w = grid.rad(tau ** (-s))
        rep.source_bound = float(np.max(np.abs(w * source.interior)))
        rep.weighted_sup = float(np.max(np.abs(w * solution.interior)))
        if rep.positive:
            rep.bound = rep.source_bound / rep.delta * (1.0 + tol)
            rep.bound_ok = rep.weighted_sup <= rep.bound
    return rep
