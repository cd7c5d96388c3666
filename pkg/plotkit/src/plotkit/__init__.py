"""Figures from maxslice run directories.

Consumes the manifest.json + CSV interface of the maxslice CLI and renders
height maps, |h|^2 maps, boundary-decay fits, convergence curves and
boundary traces.  Displayed numbers are read from the run artifacts, never
recomputed.
"""

from .artifacts import ArtifactError, RunArtifacts
from .render import KINDS, render

__version__ = "0.1.0"
