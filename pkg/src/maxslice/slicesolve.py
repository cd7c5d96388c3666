"""Nonlinear maximal-slice solver: residual, Jacobian, Newton, continuation.

The residual of a height field u is

    T_eps(u) = tau^2 div0( W grad0 u ) + tau (n-2 + 2/(1-tau)) W (r du/dr)

with W = (1 - eps q)^(-1/2) and q = (1-tau)^2 |grad0 u|^2 < 1 the spacelike
condition.  eps = 1 is the maximal-slice equation itself; if u solves the
eps-family equation then sqrt(eps) u solves the eps = 1 equation, an exact
pointwise scaling that the discretization inherits.

`newton_solve` runs damped Newton on the interior unknowns with the
Dirichlet ring fixed; each linear step is matrix-free BiCGStab on the
analytic Jacobian, right-preconditioned by the direct mode-space solver of
the linearized-at-zero operator (the whole construction is a perturbation of
that operator, so it preconditions well at the small amplitudes where
solutions exist).  `continuation_solve` climbs a geometric ladder of
boundary amplitudes toward sqrt(eps) * datum, reseeding each rung with the
scaled previous solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (MaxIterations, NonSpacelikeField, NonSpacelikeStep,
                     SolverDiverged)
from .fields import ScalarField
from .kernel import SliceKernel
from .linear import BoundaryDatum, _resolve_bdata, _solve_modes, bicgstab, boundary_corrector

__all__ = [
    "SolverConfig", "SliceSolution", "residual", "jacobian_vector",
    "newton_solve", "continuation_solve",
]

DEFAULT_MARGIN = 0.05


@dataclass(frozen=True)
class SolverConfig:
    """Newton/continuation knobs.

    margin is the spacelike safety gap: fields are kept with
    q <= 1 - margin, so the Lorentz factor W stays bounded and the Jacobian
    well conditioned.
    """

    steps: int = 8                  # continuation ladder length
    tol: float = 1e-10              # residual sup-norm target
    max_iter: int = 25              # Newton iterations per ladder rung
    damping_floor: float = 1e-4    # smallest line-search fraction
    margin: float = DEFAULT_MARGIN
    krylov_rtol: float = 1e-10
    krylov_maxiter: int = 300

    def __post_init__(self):
        if self.steps < 1 or self.tol <= 0 or self.max_iter < 1:
            raise ValueError("invalid solver configuration")
        if not (0.0 < self.margin <= 0.5):
            raise ValueError("margin must lie in (0, 0.5]")


@dataclass
class SliceSolution:
    """A solved height field with its certificates."""

    u: ScalarField
    bdata: object
    eps: float
    residual_sup: float
    spacelike_margin: float         # 1 - max q, positive for spacelike fields
    iterations: int                 # Newton iterations at the final rung
    log: list = field(default_factory=list)   # per-rung dicts with residual history


def residual(u: ScalarField, eps=1.0, margin=DEFAULT_MARGIN) -> ScalarField:
    """T_eps(u); raises NonSpacelikeField when q >= 1 - margin anywhere."""
    return SliceKernel(u.grid, eps).residual(u, margin=margin)


def jacobian_vector(u: ScalarField, v: ScalarField, eps=1.0,
                    margin=DEFAULT_MARGIN) -> ScalarField:
    """Directional derivative of T_eps at u in direction v (analytic)."""
    return SliceKernel(u.grid, eps).jvp(u, v, margin=margin)


def _qmax(kernel, u):
    return kernel.state(u, margin=0.0)["qmax"]


def newton_solve(bdata, u0: ScalarField, cfg: SolverConfig = SolverConfig(),
                 eps=1.0) -> SliceSolution:
    """Damped Newton for T_eps(u) = 0 with the Dirichlet trace of bdata.

    The seed must be spacelike with the configured margin and carry the
    resolved boundary samples.  Steps that would push q past 1 - margin are
    damped; hitting the damping floor there raises NonSpacelikeStep.
    """
    grid = u0.grid
    kern = SliceKernel(grid, eps)
    samples = _resolve_bdata(bdata, grid)
    if not np.allclose(u0.boundary, samples, atol=1e-12):
        raise ValueError("seed trace does not match the boundary datum")
    u = ScalarField(grid, u0.interior.copy(), samples)

    state = kern.state(u, margin=cfg.margin)   # raises NonSpacelikeField if seed bad
    res = kern.residual(u, state=state)
    rnorm = res.sup()
    history = [rnorm]
    damps = []
    it = 0
    while rnorm > cfg.tol:
        if it >= cfg.max_iter:
            raise MaxIterations(
                f"newton: residual {rnorm:.3e} after {it} iterations")

        def matvec(x, _state=state):
            v = ScalarField(grid, x.reshape(grid.shape))
            return kern.jvp(u, v, state=_state).interior.ravel()

        def precon(x):
            return _solve_modes(grid, x.reshape(grid.shape),
                                np.zeros(grid.sphere.shape)).ravel()

        try:
            dx, _ = bicgstab(matvec, -res.interior.ravel(), precond=precon,
                             rtol=cfg.krylov_rtol, maxiter=cfg.krylov_maxiter)
        except SolverDiverged as exc:
            raise SolverDiverged(f"newton inner solve failed: {exc}") from exc
        step = ScalarField(grid, dx.reshape(grid.shape))

        alpha = 1.0
        while True:
            trial = ScalarField(grid, u.interior + alpha * step.interior, samples)
            try:
                trial_state = kern.state(trial, margin=cfg.margin)
            except NonSpacelikeField:
                alpha *= 0.5
                if alpha < cfg.damping_floor:
                    raise NonSpacelikeStep(
                        "newton: damping floor reached against the spacelike margin")
                continue
            trial_res = kern.residual(trial, state=trial_state)
            trial_norm = trial_res.sup()
            if trial_norm <= (1.0 - 1e-4 * alpha) * rnorm or trial_norm <= cfg.tol:
                break
            alpha *= 0.5
            if alpha < cfg.damping_floor:
                raise SolverDiverged(
                    f"newton: no descent at damping floor (residual {rnorm:.3e})")
        u, state, res, rnorm = trial, trial_state, trial_res, trial_norm
        history.append(rnorm)
        damps.append(alpha)
        it += 1

    return SliceSolution(
        u=u, bdata=bdata, eps=eps, residual_sup=rnorm,
        spacelike_margin=1.0 - state["qmax"], iterations=it,
        log=[{"residuals": history, "damping": damps}],
    )


def continuation_solve(g, eps, cfg: SolverConfig = SolverConfig(),
                       grid=None) -> SliceSolution:
    """Solve the maximal-slice equation with boundary data sqrt(eps) * g.

    Climbs the geometric amplitude ladder lambda_k = 2^(k - steps) toward 1,
    seeding rung k with the rescaled solution of rung k-1 (the first rung is
    seeded by the boundary corrector).  On failure the propagated error
    carries the failing ladder fraction and the largest amplitude reached.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if grid is None:
        raise ValueError("pass the grid the datum is to be resolved on")
    if not isinstance(g, BoundaryDatum):
        g = BoundaryDatum("samples", np.asarray(g, dtype=float))
    root = math.sqrt(eps)
    if eps == 0.0:
        zero = ScalarField.zeros(grid)
        return SliceSolution(u=zero, bdata=g.scaled(0.0), eps=0.0,
                             residual_sup=0.0, spacelike_margin=1.0,
                             iterations=0, log=[])

    lams = [2.0 ** (k - cfg.steps) for k in range(1, cfg.steps + 1)]
    corrector = boundary_corrector(g, grid)
    u = lams[0] * root * corrector
    logs = []
    sol = None
    reached = 0.0
    for k, lam in enumerate(lams):
        bd_k = g.scaled(lam * root)
        if k > 0:
            ratio = lam / lams[k - 1]
            u = ScalarField(grid, ratio * sol.u.interior,
                            bd_k.resolve(grid.sphere))
        try:
            sol = newton_solve(bd_k, u, cfg)
        except (NonSpacelikeStep, MaxIterations, SolverDiverged,
                NonSpacelikeField) as exc:
            if isinstance(exc, NonSpacelikeField):
                exc = NonSpacelikeStep(f"continuation seed left the margin: {exc}")
            exc.failing_lambda = lam
            exc.best_amplitude = reached * root
            raise exc
        reached = lam
        logs.append({"lambda": lam, "iterations": sol.iterations,
                     "residual": sol.residual_sup, **sol.log[0]})
    return SliceSolution(u=sol.u, bdata=g.scaled(root), eps=eps,
                         residual_sup=sol.residual_sup,
                         spacelike_margin=sol.spacelike_margin,
                         iterations=sol.iterations, log=logs)
