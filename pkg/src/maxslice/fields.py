"""Discrete scalar fields on ball grids, with CSV serialization.

A field stores one value per interior node plus a Dirichlet trace on the
boundary ring.  Fields are treated as immutable: arithmetic returns new
instances, and in-place mutation of the arrays is on the caller.
"""

from __future__ import annotations

import io
import numpy as np

from .errors import ConfigError, GridMismatch
from .grids import Grid

__all__ = ["ScalarField", "write_csv", "read_csv"]


class ScalarField:
    """Scalar samples on a Grid: interior (nr, *ang) and boundary (*ang)."""

    __slots__ = ("grid", "interior", "boundary")

    def __init__(self, grid, interior, boundary=None):
        interior = np.asarray(interior, dtype=float)
        if interior.shape != grid.shape:
            raise GridMismatch(f"interior shape {interior.shape} != grid {grid.shape}")
        if boundary is None:
            boundary = np.zeros(grid.sphere.shape)
        boundary = np.asarray(boundary, dtype=float)
        if boundary.shape != grid.sphere.shape:
            raise GridMismatch("boundary shape does not match the grid")
        if not (np.all(np.isfinite(interior)) and np.all(np.isfinite(boundary))):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.interior = interior
        self.boundary = boundary

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.sphere.shape))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.shape, float(c)), np.full(grid.sphere.shape, float(c)))

    @classmethod
    def from_radial(cls, grid, fn):
        """Sample a radial profile fn(r) (vectorized over node radii)."""
        prof = np.asarray(fn(grid.r), dtype=float)
        interior = np.broadcast_to(grid.rad(prof), grid.shape).copy()
        bval = float(fn(np.asarray([1.0]))[0])
        return cls(grid, interior, np.full(grid.sphere.shape, bval))

    def copy(self):
        return ScalarField(self.grid, self.interior.copy(), self.boundary.copy())

    def same_grid(self, other):
        if not self.grid.compatible(other.grid):
            raise GridMismatch("fields live on different grids")

    # minimal arithmetic (fields are vectors over a fixed grid)
    def __add__(self, other):
        self.same_grid(other)
        return ScalarField(self.grid, self.interior + other.interior, self.boundary + other.boundary)

    def __sub__(self, other):
        self.same_grid(other)
        return ScalarField(self.grid, self.interior - other.interior, self.boundary - other.boundary)

    def __mul__(self, a):
        a = float(a)
        return ScalarField(self.grid, a * self.interior, a * self.boundary)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def sup(self):
        """Max absolute interior value."""
        return float(np.max(np.abs(self.interior)))

    def padded(self):
        return self.grid.pad(self.interior, self.boundary)


def _rows(grid):
    """Yield coordinate columns for every node, interior rings then boundary."""
    sph = grid.sphere
    if sph.kind == "full":
        for i, r in enumerate(np.append(grid.r, 1.0)):
            for jt, th in enumerate(sph.theta):
                for jp, ph in enumerate(sph.phi):
                    yield float(r), float(th), float(ph), (i, jt, jp)
    else:
        for i, r in enumerate(np.append(grid.r, 1.0)):
            for jt, th in enumerate(sph.theta):
                yield float(r), float(th), None, (i, jt)


def write_csv(field, path_or_buf):
    """Write `r,theta[,phi],value` rows; boundary rows carry r = 1.

    Numbers use the shortest round-trip decimal form so files diff cleanly.
    """
    grid = field.grid
    close = False
    if isinstance(path_or_buf, (str, bytes)):
        buf = open(path_or_buf, "w")
        close = True
    else:
        buf = path_or_buf
    try:
        has_phi = grid.sphere.kind == "full"
        buf.write("r,theta,phi,value\n" if has_phi else "r,theta,value\n")
        vals = np.concatenate([field.interior, field.boundary[None]], axis=0)
        for r, th, ph, idx in _rows(grid):
            v = float(vals[idx])
            if has_phi:
                buf.write(f"{r!r},{th!r},{ph!r},{v!r}\n")
            else:
                buf.write(f"{r!r},{th!r},{v!r}\n")
    finally:
        if close:
            buf.close()


def _match(nodes, ref, what):
    if nodes.size != ref.size or not np.allclose(nodes, ref, atol=1e-9, rtol=0):
        raise ConfigError(f"CSV {what} nodes do not match a supported grid layout")


def read_csv(path_or_buf, n=None, mode=None):
    """Reconstruct a ScalarField from its CSV form.

    The grid is inferred from the node layout: the number of distinct radii
    fixes nr, and the angular nodes are matched against the equispaced
    (n = 2) or Gauss-Legendre (n = 3) layouts unless n/mode are forced.
    """
    if isinstance(path_or_buf, (str, bytes)):
        with open(path_or_buf) as fh:
            text = fh.read()
    else:
        text = path_or_buf.read()
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    header = lines[0].strip().split(",")
    if header[:2] != ["r", "theta"] or header[-1] != "value":
        raise ConfigError("unrecognized CSV header")
    has_phi = "phi" in header
    data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",")
    data = np.atleast_2d(data)
    rs = np.unique(data[:, 0])
    if not np.isclose(rs[-1], 1.0):
        raise ConfigError("CSV lacks boundary rows at r = 1")
    nr = rs.size - 1
    if has_phi:
        thetas = np.unique(data[:, 1])
        phis = np.unique(data[:, 2])
        grid = Grid(3, nr, thetas.size, phis.size, mode="full")
        _match(np.sort(thetas), np.sort(grid.sphere.theta), "colatitude")
        vals = np.full((nr + 1, thetas.size, phis.size), np.nan)
        it = np.searchsorted(rs, data[:, 0])
        jt = np.searchsorted(np.sort(grid.sphere.theta), data[:, 1])
        # theta stored ascending in files and on the grid
        jp = np.rint(data[:, 2] / (2 * np.pi / phis.size)).astype(int) % phis.size
        vals[it, jt, jp] = data[:, 3]
    else:
        thetas = np.unique(data[:, 1])
        ntheta = thetas.size
        if n is None:
            uniform = np.allclose(np.sort(thetas), 2 * np.pi * np.arange(ntheta) / ntheta, atol=1e-9)
            n = 2 if uniform else 3
        grid = Grid(n, nr, ntheta, mode=mode)
        _match(np.sort(thetas), np.sort(grid.sphere.theta), "angular")
        vals = np.full((nr + 1, ntheta), np.nan)
        it = np.searchsorted(rs, data[:, 0])
        jt = np.searchsorted(np.sort(grid.sphere.theta), data[:, 1])
        vals[it, jt] = data[:, 2]
    if np.any(np.isnan(vals)):
        raise ConfigError("CSV is missing nodes")
    if grid.sphere.kind == "axisym" or (grid.sphere.kind == "full"):
        # grid.theta ascends already; searchsorted used the ascending order
        pass
    return ScalarField(grid, vals[:-1], vals[-1])
