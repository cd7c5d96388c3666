"""Exception types shared across the package."""


class MaxsliceError(Exception):
    """Base class for all package errors."""


class ConfigError(MaxsliceError):
    """Invalid configuration or parameters rejected before any compute."""


class GridMismatch(MaxsliceError):
    """Fields built on different grids were combined."""


class OutsideCoveringBall(MaxsliceError):
    """Rescale offset left the unit covering ball (|z| >= 1/3)."""


class DegenerateEmbedding(MaxsliceError):
    """Ambient embedding requested at the conformal boundary r = 1."""


class NotSpacelikeHyperplane(MaxsliceError):
    """Geodesic slice parameters with A^2 + B^2 + C^2 >= 1."""


class NonSpacelikeField(MaxsliceError):
    """Height field violates the spacelike margin q <= 1 - margin."""


class NonSpacelikeStep(MaxsliceError):
    """Newton damping floor reached while the step would break spacelikeness."""

    def __init__(self, msg, failing_lambda=None, best_amplitude=None):
        super().__init__(msg)
        self.failing_lambda = failing_lambda
        self.best_amplitude = best_amplitude


class MaxIterations(MaxsliceError):
    """Newton iteration budget exhausted without meeting the tolerance."""

    def __init__(self, msg, failing_lambda=None, best_amplitude=None):
        super().__init__(msg)
        self.failing_lambda = failing_lambda
        self.best_amplitude = best_amplitude


class SolverDiverged(MaxsliceError):
    """Inner linear solve (Krylov) stagnated or broke down."""

    def __init__(self, msg, failing_lambda=None, best_amplitude=None):
        super().__init__(msg)
        self.failing_lambda = failing_lambda
        self.best_amplitude = best_amplitude


class DegenerateFit(MaxsliceError):
    """Decay-exponent fit requested on an (essentially) all-zero window."""
