"""Dirichlet / tangential boundary data and the node masks that impose it.

The displacement is prescribed on all boundary nodes.  The micro-distortion
carries a tangential condition row by row: on a face with outward normal
n = +-e_a, the cross product row x n vanishing means exactly that the row
components with index != a are pinned.  Inhomogeneous tangential data is
supplied as a volumetric extension field on the full grid and its
tangential part is copied onto the boundary nodes (the analysis reduces the
inhomogeneous problem to the homogeneous one by such a lifting, and the
simulator does the same).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .grid import CartesianGrid

__all__ = [
    "BoundaryData",
    "boundary_mask",
    "pinned_component_mask",
    "normal_component_mask",
    "face_index",
    "outward_normal",
]

# time step used to difference user callables that come without derivatives
_FD_DT = 1.0e-6

FieldFn = Callable[[CartesianGrid, float], np.ndarray]


@lru_cache(maxsize=64)
def boundary_mask(grid: CartesianGrid) -> np.ndarray:
    """Boolean (nx, ny, nz) mask of nodes on any box face."""
    m = np.zeros(grid.shape, dtype=bool)
    for a in range(3):
        idx = [slice(None)] * 3
        for side in (0, -1):
            idx[a] = side
            m[tuple(idx)] = True
    m.setflags(write=False)
    return m


@lru_cache(maxsize=64)
def pinned_component_mask(grid: CartesianGrid, j: int) -> np.ndarray:
    """Nodes where column component j of every row of P is tangential.

    Component j of a row is tangential on faces whose normal axis differs
    from j, so it is pinned on the union of those faces.
    """
    m = np.zeros(grid.shape, dtype=bool)
    for a in range(3):
        if a == j:
            continue
        idx = [slice(None)] * 3
        for side in (0, -1):
            idx[a] = side
            m[tuple(idx)] = True
    m.setflags(write=False)
    return m


@lru_cache(maxsize=64)
def normal_component_mask(grid: CartesianGrid, a: int) -> np.ndarray:
    """Nodes where vector component a is normal to the boundary (faces +-e_a)."""
    m = np.zeros(grid.shape, dtype=bool)
    idx = [slice(None)] * 3
    for side in (0, -1):
        idx[a] = side
        m[tuple(idx)] = True
    m.setflags(write=False)
    return m


def face_index(axis: int, side: int) -> tuple:
    """Slicing index selecting one box face (side 0 or -1 along ``axis``)."""
    idx = [slice(None)] * 3
    idx[axis] = 0 if side == 0 else -1
    return tuple(idx)


def outward_normal(axis: int, side: int) -> np.ndarray:
    n = np.zeros(3)
    n[axis] = -1.0 if side == 0 else 1.0
    return n


def _fd_time_derivative(fn: FieldFn) -> FieldFn:
    def deriv(grid: CartesianGrid, t: float) -> np.ndarray:
        return (fn(grid, t + _FD_DT) - fn(grid, t - _FD_DT)) / (2.0 * _FD_DT)

    return deriv


@dataclass
class BoundaryData:
    """Time-dependent Dirichlet data g for u and tangential extension for P.

    ``g``: callable (grid, t) -> (3, nx, ny, nz); only boundary values are
    used.  ``G_ext``: callable (grid, t) -> (3, 3, nx, ny, nz) volumetric
    extension whose tangential part is imposed on P.  ``None`` means
    homogeneous.  Time derivatives default to second-order centered
    differencing of the callables.
    """

    g: Optional[FieldFn] = None
    g_t: Optional[FieldFn] = None
    G_ext: Optional[FieldFn] = None
    G_ext_t: Optional[FieldFn] = None

    def __post_init__(self):
        if self.g is not None and self.g_t is None:
            self.g_t = _fd_time_derivative(self.g)
        if self.G_ext is not None and self.G_ext_t is None:
            self.G_ext_t = _fd_time_derivative(self.G_ext)

    @classmethod
    def homogeneous(cls) -> "BoundaryData":
        return cls()

    @classmethod
    def from_samples(cls, times: np.ndarray, g_samples=None, G_samples=None) -> "BoundaryData":
        """Boundary data from time samples.

        Values are interpolated linearly; time derivatives use the
        second-order centered difference of the samples (one-sided at the
        ends), interpolated the same way.
        """
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) < 3:
            raise ValueError("need at least three time samples")

        def interpolant(samples):
            samples = np.asarray(samples, dtype=float)

            def value(grid, t):
                return _interp_time(times, samples, t)

            return value

        def derivative_interpolant(samples):
            samples = np.asarray(samples, dtype=float)
            d = np.gradient(samples, times, axis=0, edge_order=2)

            def value(grid, t):
                return _interp_time(times, d, t)

            return value

        kwargs = {}
        if g_samples is not None:
            kwargs["g"] = interpolant(g_samples)
            kwargs["g_t"] = derivative_interpolant(g_samples)
        if G_samples is not None:
            kwargs["G_ext"] = interpolant(G_samples)
            kwargs["G_ext_t"] = derivative_interpolant(G_samples)
        return cls(**kwargs)

    @property
    def is_homogeneous(self) -> bool:
        return self.g is None and self.G_ext is None

    def impose_values(self, u: np.ndarray, P: np.ndarray,
                      grid: CartesianGrid, t: float) -> None:
        """Overwrite u on boundary nodes and tangential P components in place."""
        bm = boundary_mask(grid)
        if self.g is None:
            u[:, bm] = 0.0
        else:
            gv = self.g(grid, t)
            u[:, bm] = gv[:, bm]
        G = None if self.G_ext is None else self.G_ext(grid, t)
        for j in range(3):
            pm = pinned_component_mask(grid, j)
            if G is None:
                P[:, j][:, pm] = 0.0
            else:
                P[:, j][:, pm] = G[:, j][:, pm]

    def impose_rates(self, u_t: np.ndarray, P_t: np.ndarray,
                     grid: CartesianGrid, t: float) -> None:
        """Same pinning applied to the velocity fields via the data rates."""
        bm = boundary_mask(grid)
        if self.g_t is None:
            u_t[:, bm] = 0.0
        else:
            gv = self.g_t(grid, t)
            u_t[:, bm] = gv[:, bm]
        Gt = None if self.G_ext_t is None else self.G_ext_t(grid, t)
        for j in range(3):
            pm = pinned_component_mask(grid, j)
            if Gt is None:
                P_t[:, j][:, pm] = 0.0
            else:
                P_t[:, j][:, pm] = Gt[:, j][:, pm]


def _interp_time(times: np.ndarray, samples: np.ndarray, t: float) -> np.ndarray:
    """Linear interpolation of a stack of field samples along axis 0."""
    if t <= times[0]:
        return samples[0]
    if t >= times[-1]:
        return samples[-1]
    i = int(np.searchsorted(times, t) - 1)
    w = (t - times[i]) / (times[i + 1] - times[i])
    return (1.0 - w) * samples[i] + w * samples[i + 1]
