"""Box domain, uniform node lattice, and node-sampled field containers.

The domain is an axis-aligned box (a convex polyhedron, so the trace and
Gaffney theory used by the diagnostics applies).  All field components of
the displacement and the micro-distortion are collocated at the nodes.
Quadrature is the tensor-product trapezoidal rule, exact for per-axis
linear integrands and matching the second-order stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "CartesianGrid",
    "ScalarField",
    "VectorField",
    "TensorField",
    "SimulationState",
    "integrate_scalar",
    "integrate_values",
    "l2_norm_squared",
]


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform node lattice on an axis-aligned box.

    ``counts`` are nodes per axis (>= 4 so the one-sided boundary stencils
    fit).  In the default bounded mode the nodes include both box faces and
    ``spacing = length / (count - 1)``.  In periodic mode the box wraps
    around, nodes cover [0, length) and ``spacing = length / count``; there
    are no boundary nodes and wraparound stencils apply.
    """

    lengths: tuple[float, float, float]
    counts: tuple[int, int, int]
    periodic: bool = False

    def __post_init__(self):
        if len(self.lengths) != 3 or len(self.counts) != 3:
            raise ValueError("lengths and counts must have three entries")
        object.__setattr__(self, "lengths", tuple(float(l) for l in self.lengths))
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        if any(l <= 0 for l in self.lengths):
            raise ValueError(f"box edge lengths must be positive, got {self.lengths}")
        if any(n < 4 for n in self.counts):
            raise ValueError(f"need at least 4 nodes per axis, got {self.counts}")

    @property
    def spacing(self) -> tuple[float, float, float]:
        if self.periodic:
            return tuple(l / n for l, n in zip(self.lengths, self.counts))
        return tuple(l / (n - 1) for l, n in zip(self.lengths, self.counts))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.counts

    @property
    def node_count(self) -> int:
        nx, ny, nz = self.counts
        return nx * ny * nz

    def axis_coordinates(self, axis: int) -> np.ndarray:
        return np.arange(self.counts[axis]) * self.spacing[axis]

    def meshgrid(self) -> np.ndarray:
        """Node coordinates as an array of shape (3, nx, ny, nz)."""
        axes = [self.axis_coordinates(a) for a in range(3)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def quadrature_axis_weights(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        w = np.full(self.counts[axis], h)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * h
        return w

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoidal node weights of shape (nx, ny, nz); cached per grid."""
        return _cached_weights(self.lengths, self.counts, self.periodic)


@lru_cache(maxsize=32)
def _cached_weights(lengths, counts, periodic) -> np.ndarray:
    g = CartesianGrid(lengths, counts, periodic)
    wx, wy, wz = (g.quadrature_axis_weights(a) for a in range(3))
    w = wx[:, None, None] * wy[None, :, None] * wz[None, None, :]
    w.setflags(write=False)
    return w


def _check_shape(values: np.ndarray, grid: CartesianGrid, lead: tuple[int, ...]):
    expected = lead + grid.shape
    if values.shape != expected:
        raise ValueError(f"field shape {values.shape} does not match {expected}")


@dataclass
class ScalarField:
    """One real value per node, shape (nx, ny, nz)."""

    values: np.ndarray
    grid: CartesianGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_shape(self.values, self.grid, ())

    @classmethod
    def zeros(cls, grid: CartesianGrid) -> "ScalarField":
        return cls(np.zeros(grid.shape), grid)

    @classmethod
    def from_function(cls, grid: CartesianGrid, fn) -> "ScalarField":
        x = grid.meshgrid()
        return cls(np.asarray(fn(x[0], x[1], x[2]), dtype=float), grid)


@dataclass
class VectorField:
    """One 3-vector per node, shape (3, nx, ny, nz), component index first."""

    values: np.ndarray
    grid: CartesianGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_shape(self.values, self.grid, (3,))

    @classmethod
    def zeros(cls, grid: CartesianGrid) -> "VectorField":
        return cls(np.zeros((3,) + grid.shape), grid)

    @classmethod
    def from_function(cls, grid: CartesianGrid, fn) -> "VectorField":
        x = grid.meshgrid()
        return cls(np.asarray(fn(x[0], x[1], x[2]), dtype=float), grid)

    def copy(self) -> "VectorField":
        return VectorField(self.values.copy(), self.grid)


@dataclass
class TensorField:
    """One 3x3 tensor per node, shape (3, 3, nx, ny, nz), row index first."""

    values: np.ndarray
    grid: CartesianGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_shape(self.values, self.grid, (3, 3))

    @classmethod
    def zeros(cls, grid: CartesianGrid) -> "TensorField":
        return cls(np.zeros((3, 3) + grid.shape), grid)

    @classmethod
    def from_function(cls, grid: CartesianGrid, fn) -> "TensorField":
        x = grid.meshgrid()
        return cls(np.asarray(fn(x[0], x[1], x[2]), dtype=float), grid)

    def copy(self) -> "TensorField":
        return TensorField(self.values.copy(), self.grid)


@dataclass
class SimulationState:
    """Displacement, micro-distortion, and their velocities at one time level."""

    time: float
    u: VectorField
    u_t: VectorField
    P: TensorField
    P_t: TensorField

    def __post_init__(self):
        g = self.u.grid
        for f in (self.u_t, self.P, self.P_t):
            if f.grid != g:
                raise ValueError("all state fields must share one grid")

    @property
    def grid(self) -> CartesianGrid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: CartesianGrid, time: float = 0.0) -> "SimulationState":
        return cls(
            time=time,
            u=VectorField.zeros(grid),
            u_t=VectorField.zeros(grid),
            P=TensorField.zeros(grid),
            P_t=TensorField.zeros(grid),
        )

    def copy(self) -> "SimulationState":
        return SimulationState(
            self.time, self.u.copy(), self.u_t.copy(), self.P.copy(), self.P_t.copy()
        )


def integrate_values(values: np.ndarray, grid: CartesianGrid) -> float:
    """Trapezoidal integral of a raw (nx, ny, nz) array over the box."""
    wx, wy, wz = (grid.quadrature_axis_weights(a) for a in range(3))
    return float(np.einsum("i,j,k,ijk->", wx, wy, wz, values))


def integrate_scalar(f: ScalarField) -> float:
    """Trapezoidal integral of a scalar field over the box."""
    return integrate_values(f.values, f.grid)


def region_slices(grid: CartesianGrid, lo, hi) -> tuple[slice, slice, slice]:
    """Index ranges of the nodes inside the box [lo, hi] (snapped per axis)."""
    slices = []
    for a in range(3):
        h = grid.spacing[a]
        i0 = int(np.ceil(lo[a] / h - 1e-12))
        i1 = int(np.floor(hi[a] / h + 1e-12))
        if i1 <= i0:
            raise ValueError(f"box too thin to contain nodes on axis {a}")
        slices.append(slice(i0, i1 + 1))
    return tuple(slices)


def integrate_region_sq(values: np.ndarray, grid: CartesianGrid,
                        region: tuple[slice, slice, slice]) -> float:
    """Trapezoidal integral of the squared field over a node-aligned sub-box.

    ``values`` may carry leading component axes; they are summed into a
    pointwise squared norm first.
    """
    sq = values * values
    while sq.ndim > 3:
        sq = sq.sum(axis=0)
    sub = sq[region]
    total = sub
    for a in range(3):
        n = sub.shape[a]
        w = np.full(n, grid.spacing[a])
        w[0] = w[-1] = 0.5 * grid.spacing[a]
        shape = [1, 1, 1]
        shape[a] = n
        total = total * w.reshape(shape)
    return float(total.sum())


def l2_norm_squared(f, weight: ScalarField | None = None) -> float:
    """Integral of the pointwise squared (Frobenius) norm, optionally weighted.

    ``f`` may be a scalar, vector or tensor field.  ``weight`` multiplies the
    squared-norm integrand as-is, so weighting with eta^2 is identical to
    scaling the field pointwise by eta.
    """
    grid = f.grid
    v = f.values
    sq = v * v
    while sq.ndim > 3:
        sq = sq.sum(axis=0)
    if weight is not None:
        if weight.grid != grid:
            raise ValueError("weight must share the field's grid")
        sq = sq * weight.values
    return integrate_values(sq, grid)
