"""Discrete differential operators on node fields.

Every operator is a composition of per-axis difference matrices (centered
in the interior, second-order one-sided at the two boundary layers, exact
on quadratics).  Because the three axis matrices act on distinct array
axes they commute, which makes the identities Curl(Grad u) = 0 and
Div(Curl P) = 0 hold to machine precision on every grid - the discrete
analogue of the vanishing div-curl compositions the dynamics relies on.

Field-level functions wrap the selected kernel backend; the ``*_values``
variants operate on raw component-first arrays for hot paths.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .grid import CartesianGrid, ScalarField, TensorField, VectorField

__all__ = [
    "axis_derivative",
    "gradient",
    "curl_tensor",
    "div_tensor",
    "curl_vector",
    "div_vector",
    "gradient_values",
    "curl_tensor_values",
    "div_tensor_values",
]


def axis_derivative(f: ScalarField, axis: int) -> ScalarField:
    """Partial derivative of a scalar field along ``axis`` (0, 1 or 2)."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    g = f.grid
    out = kernels.diff3(f.values, axis, g.spacing[axis], g.periodic)
    return ScalarField(out, g)


def gradient_values(u: np.ndarray, grid: CartesianGrid) -> np.ndarray:
    return kernels.grad_vec(u, grid.spacing, grid.periodic)


def gradient(u: VectorField) -> TensorField:
    """Displacement gradient, (grad u)_ij = d_j u_i."""
    return TensorField(gradient_values(u.values, u.grid), u.grid)


def curl_tensor_values(P: np.ndarray, grid: CartesianGrid) -> np.ndarray:
    return kernels.curl_rows(P, grid.spacing, grid.periodic)


def curl_tensor(P: TensorField) -> TensorField:
    """Row-wise curl: row i of the result is the vector curl of row i of P."""
    return TensorField(curl_tensor_values(P.values, P.grid), P.grid)


def div_tensor_values(S: np.ndarray, grid: CartesianGrid) -> np.ndarray:
    return kernels.div_rows(S, grid.spacing, grid.periodic)


def div_tensor(S: TensorField) -> VectorField:
    """Row-wise divergence, (Div S)_i = sum_j d_j S_ij."""
    return VectorField(div_tensor_values(S.values, S.grid), S.grid)


def curl_vector(v: VectorField) -> VectorField:
    """Vector curl of a 3-component node field."""
    g = v.grid
    h = g.spacing
    out = np.empty_like(v.values)
    scratch = np.empty(g.shape)
    for (c, a, b) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        # (curl v)_c = d_a v_b - d_b v_a
        kernels.diff3(v.values[b], a, h[a], g.periodic, out=out[c])
        kernels.diff3(v.values[a], b, h[b], g.periodic, out=scratch)
        out[c] -= scratch
    return VectorField(out, g)


def div_vector(v: VectorField) -> ScalarField:
    """Scalar divergence of a 3-component node field."""
    g = v.grid
    out = kernels.diff3(v.values[0], 0, g.spacing[0], g.periodic)
    for j in (1, 2):
        out += kernels.diff3(v.values[j], j, g.spacing[j], g.periodic)
    return ScalarField(out, g)
