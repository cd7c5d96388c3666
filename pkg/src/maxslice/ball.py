"""Exact coordinate geometry of the hyperbolic unit ball and its anti-de
Sitter ambient.

The hyperbolic space H^n is the open unit ball with metric tau^{-2} * dx^2,
tau(x) = (1 - |x|^2)/2.  The radial coordinate rho is tied to r = |x| by
sinh(rho) = tau/r, i.e. rho = -log r, so rho -> 0 is the conformal boundary
and rho -> infinity the center.  All hyperbolic factors are evaluated through
rational identities in r (e.g. coth(rho) = (1+r^2)/(1-r^2)) rather than
through rho itself, which avoids cancellation near the boundary.

The ambient anti-de Sitter space sits inside the semi-Euclidean space R^{n+2}
with inner product signature (+,...,+,-,-) as the quadric <X, X> = -1, via
the global ("sausage") chart

    X = ( x / tau,  ((1-tau)/tau) cos t,  ((1-tau)/tau) sin t ).

For n = 3 this is R^5 with two timelike slots; the n = 2 analogue drops one
spatial slot and is a derived extension validated through residual checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEmbedding, OutsideCoveringBall

__all__ = [
    "AmbientVector",
    "BallPoint",
    "CoordinateFactors",
    "coordinate_factors",
    "tau_of_r",
    "ambient_embed",
    "ambient_embed_arrays",
    "ambient_unembed",
    "minkowski_inner",
    "rescale_map",
    "tau_ratio",
]

# Ambient vectors are plain (n+2)-component float arrays; the two trailing
# slots are the timelike pair of the semi-Euclidean inner product.
AmbientVector = np.ndarray


def tau_of_r(r):
    """Boundary-defining function tau = (1 - r^2)/2; works on scalars or arrays."""
    return 0.5 * (1.0 - np.asarray(r, dtype=float) ** 2) + 0.0


@dataclass(frozen=True)
class BallPoint:
    """Point of the closed unit ball in R^n (n = 2 or 3), Euclidean coordinates."""

    cartesian: tuple

    def __post_init__(self):
        x = np.asarray(self.cartesian, dtype=float)
        if x.ndim != 1 or x.size not in (2, 3):
            raise ValueError("BallPoint needs 2 or 3 cartesian coordinates")
        if np.linalg.norm(x) > 1.0 + 1e-12:
            raise ValueError(f"point outside the closed unit ball: |x| = {np.linalg.norm(x)}")
        object.__setattr__(self, "cartesian", tuple(float(c) for c in x))

    @classmethod
    def from_polar(cls, r, theta, phi=None):
        """Build from polar data: (r, theta) on the disk, (r, theta, phi) on the ball
        with theta the colatitude and phi the azimuth."""
        if phi is None:
            return cls((r * math.cos(theta), r * math.sin(theta)))
        st = math.sin(theta)
        return cls((r * st * math.cos(phi), r * st * math.sin(phi), r * math.cos(theta)))

    @property
    def n(self):
        return len(self.cartesian)

    @property
    def r(self):
        return math.hypot(*self.cartesian)

    @property
    def theta(self):
        """Azimuth on the disk; colatitude on the ball."""
        x = self.cartesian
        if self.n == 2:
            return math.atan2(x[1], x[0])
        rr = self.r
        if rr == 0.0:
            return 0.0
        return math.acos(max(-1.0, min(1.0, x[2] / rr)))

    @property
    def phi(self):
        if self.n == 2:
            raise AttributeError("phi is defined only for n = 3")
        return math.atan2(self.cartesian[1], self.cartesian[0])

    @property
    def interior(self):
        return self.r < 1.0


@dataclass(frozen=True)
class CoordinateFactors:
    """Per-point bundle of the radial factors used throughout the solvers.

    tau = (1-r^2)/2, rho = -log r (math.inf at the center), and the hyperbolic
    functions of rho expressed rationally in r.  lam = 2r/(1+r^2) = sech(rho)
    is the factor entering the geodesic-slice height formula.  ``is_limit``
    flags the points r = 0 and r = 1 where some of the rho-fields are limits
    (rho = inf at the center; coth(rho) = inf at the boundary).
    """

    tau: float
    rho: float
    sinh_rho: float
    cosh_rho: float
    tanh_rho: float
    coth_rho: float
    lam: float
    is_limit: bool


def coordinate_factors(p: BallPoint) -> CoordinateFactors:
    """Radial coordinate factors at a point of the closed ball.

    Interior points get the full bundle; r = 0 returns the central limits
    (rho = inf, tanh = coth = 1) and r = 1 the boundary limits (tau = 0,
    tanh = 0, lam = 1, coth = inf).
    """
    r = p.r
    tau = 0.5 * (1.0 - r * r)
    one_m = 0.5 * (1.0 + r * r)  # = 1 - tau
    lam = 2.0 * r / (1.0 + r * r)
    if r == 0.0:
        return CoordinateFactors(tau=0.5, rho=math.inf, sinh_rho=math.inf,
                                 cosh_rho=math.inf, tanh_rho=1.0, coth_rho=1.0,
                                 lam=0.0, is_limit=True)
    if r >= 1.0:
        return CoordinateFactors(tau=0.0, rho=0.0, sinh_rho=0.0, cosh_rho=1.0,
                                 tanh_rho=0.0, coth_rho=math.inf, lam=1.0,
                                 is_limit=True)
    return CoordinateFactors(
        tau=tau,
        rho=-math.log(r),
        sinh_rho=tau / r,
        cosh_rho=one_m / r,
        tanh_rho=tau / one_m,
        coth_rho=one_m / tau,
        lam=lam,
        is_limit=False,
    )


def minkowski_inner(X, Y):
    """Semi-Euclidean inner product with the last two slots timelike.

    For length-5 vectors: x1 y1 + x2 y2 + x3 y3 - x4 y4 - x5 y5; length-4
    vectors use the (+,+,-,-) analogue.  Broadcasts over leading axes when
    given stacked arrays whose last axis is the component axis.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[-1] != Y.shape[-1] or X.shape[-1] not in (4, 5):
        raise ValueError("ambient vectors must have 4 or 5 components")
    k = X.shape[-1] - 2
    return np.sum(X[..., :k] * Y[..., :k], axis=-1) - X[..., k] * Y[..., k] - X[..., k + 1] * Y[..., k + 1]


def ambient_embed(p: BallPoint, t: float) -> np.ndarray:
    """Embed the point (p, t) of R x H^n into the ambient quadric <X, X> = -1.

    Returns the (n+2)-component vector (x/tau, c cos t, c sin t) with
    c = (1-tau)/tau = (1+r^2)/(1-r^2).  Raises DegenerateEmbedding at r = 1,
    where the chart blows up.
    """
    if not p.interior:
        raise DegenerateEmbedding("ambient coordinates blow up at r = 1")
    x = np.asarray(p.cartesian, dtype=float)
    tau = 0.5 * (1.0 - x @ x)
    c = (1.0 - tau) / tau
    return np.concatenate([x / tau, [c * math.cos(t), c * math.sin(t)]])


def ambient_embed_arrays(x_over_tau, c, t):
    """Vectorized embedding from precomputed x/tau (shape (..., n)), c = (1-tau)/tau
    and height t; returns shape (..., n+2)."""
    t = np.asarray(t, dtype=float)
    return np.concatenate(
        [np.asarray(x_over_tau, float),
         (c * np.cos(t))[..., None],
         (c * np.sin(t))[..., None]],
        axis=-1,
    )


def ambient_unembed(X):
    """Invert the embedding: recover (r, direction, t) from a quadric point.

    Returns (r, omega, t) with omega the unit direction in R^n (arbitrary at
    r = 0).  Round-trips ambient_embed to ~1e-15.
    """
    X = np.asarray(X, dtype=float)
    k = X.shape[-1] - 2
    c = math.hypot(X[k], X[k + 1])           # (1+r^2)/(1-r^2) >= 1
    r = math.sqrt((c - 1.0) / (c + 1.0))
    t = math.atan2(X[k + 1], X[k])
    s = np.linalg.norm(X[:k])
    omega = X[:k] / s if s > 0 else np.eye(k)[0]
    return r, omega, t


def rescale_map(x: BallPoint, z) -> BallPoint:
    """Covering-ball rescale y = x + tau(x) z for an offset |z| < 1/3.

    The image stays in the ball with tau(y)/tau(x) in [1/10, 40]; the bound is
    checked and a violation (impossible for valid inputs) raises RuntimeError.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (x.n,):
        raise ValueError("offset dimension must match the point")
    if np.linalg.norm(z) >= 1.0 / 3.0:
        raise OutsideCoveringBall(f"|z| = {np.linalg.norm(z)} >= 1/3")
    if not x.interior:
        raise ValueError("rescale_map needs an interior center")
    y = BallPoint(tuple(np.asarray(x.cartesian) + tau_of_r(x.r) * z))
    ratio = tau_ratio(x, y)
    if not (0.1 <= ratio <= 40.0):
        raise RuntimeError(f"covering-ball rescale bound violated: ratio {ratio}")
    return y


def tau_ratio(x: BallPoint, y: BallPoint) -> float:
    """tau(y)/tau(x) for two interior points."""
    return tau_of_r(y.r) / tau_of_r(x.r)
