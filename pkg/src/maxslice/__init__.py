"""maxslice: maximal spacelike slices of anti-de Sitter space, numerically.

Slices are height graphs over the hyperbolic unit ball (Poincare model).
The package solves the quasilinear degenerate-elliptic maximal-slice
equation by damped Newton with amplitude continuation, solves and analyzes
its linearization at the trivial slice, evaluates the closed-form totally
geodesic slices as oracles, and measures the geometric quantities (mean
curvature by two routes, second fundamental form, Gauss-identity residual,
boundary decay rates) that certify the results.
"""

from .ball import (AmbientVector, BallPoint, CoordinateFactors, ambient_embed,
                   ambient_unembed, coordinate_factors, minkowski_inner,
                   rescale_map, tau_of_r, tau_ratio)
from .errors import (ConfigError, DegenerateEmbedding, DegenerateFit,
                     GridMismatch, MaxIterations, MaxsliceError,
                     NonSpacelikeField, NonSpacelikeStep,
                     NotSpacelikeHyperplane, OutsideCoveringBall,
                     SolverDiverged)
from .fields import ScalarField, read_csv, write_csv
from .geodesic import (ConstancyReport, GeodesicSliceSpec, TraceFit,
                       boundary_trace, fit_geodesic_trace, geodesic_height,
                       geodesic_height_field, trace_constancy_check)
from .geometry import (GeometryReport, gauss_check, mean_curvature,
                       second_form_decay, second_fundamental_form,
                       slice_geometry, unit_normal)
from .grids import Grid, SphereGrid
from .linear import (BarrierReport, BoundaryDatum, LinearOperator, apply_linear,
                     barrier_check, barrier_image, bicgstab,
                     boundary_corrector, solve_linear)
from .norms import (DecayFit, WeightedNormReport, decay_exponent,
                    default_window, holder_surrogate, weighted_norm)
from .operators import (divergence, gradient, gradient_cartesian, laplacian,
                        radial_derivative, sphere_laplacian)
from .slicesolve import (SliceSolution, SolverConfig, continuation_solve,
                         jacobian_vector, newton_solve, residual)

__version__ = "0.1.0"
