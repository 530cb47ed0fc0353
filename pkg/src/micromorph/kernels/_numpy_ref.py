"""Pure-numpy reference implementation of the stencil kernels.

Same stencils as the compiled backend: centered second-order differences
in the interior, second-order one-sided 3-point closures at the two
boundary layers (exact on quadratics), wraparound when periodic.
"""

from __future__ import annotations

import numpy as np


def diff3(f: np.ndarray, axis: int, h: float, periodic: bool,
          out: np.ndarray | None = None) -> np.ndarray:
    """Derivative of a (nx, ny, nz) array along one axis."""
    if out is None:
        out = np.empty_like(f)
    if periodic:
        np.subtract(np.roll(f, -1, axis=axis), np.roll(f, 1, axis=axis), out=out)
        out *= 0.5 / h
        return out

    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    np.subtract(fm[2:], fm[:-2], out=om[1:-1])
    om[1:-1] *= 0.5 / h
    om[0] = (-3.0 * fm[0] + 4.0 * fm[1] - fm[2]) * (0.5 / h)
    om[-1] = (3.0 * fm[-1] - 4.0 * fm[-2] + fm[-3]) * (0.5 / h)
    return out


def grad_vec(u: np.ndarray, spacing, periodic: bool,
             out: np.ndarray | None = None) -> np.ndarray:
    """Gradient of a (3, nx, ny, nz) vector field: out[i, j] = d_j u_i."""
    if out is None:
        out = np.empty((3, 3) + u.shape[1:], dtype=u.dtype)
    for i in range(3):
        for j in range(3):
            diff3(u[i], j, spacing[j], periodic, out=out[i, j])
    return out


def curl_rows(P: np.ndarray, spacing, periodic: bool,
              out: np.ndarray | None = None) -> np.ndarray:
    """Row-wise curl of a (3, 3, nx, ny, nz) tensor field."""
    if out is None:
        out = np.empty_like(P)
    scratch = np.empty(P.shape[2:], dtype=P.dtype)
    for i in range(3):
        for (c, a, b) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            # (curl v)_c = d_a v_b - d_b v_a
            diff3(P[i, b], a, spacing[a], periodic, out=out[i, c])
            diff3(P[i, a], b, spacing[b], periodic, out=scratch)
            out[i, c] -= scratch
    return out


def div_rows(S: np.ndarray, spacing, periodic: bool,
             out: np.ndarray | None = None) -> np.ndarray:
    """Row-wise divergence of a (3, 3, nx, ny, nz) tensor field."""
    if out is None:
        out = np.empty((3,) + S.shape[2:], dtype=S.dtype)
    scratch = np.empty(S.shape[2:], dtype=S.dtype)
    for i in range(3):
        diff3(S[i, 0], 0, spacing[0], periodic, out=out[i])
        for j in (1, 2):
            diff3(S[i, j], j, spacing[j], periodic, out=scratch)
            out[i] += scratch
    return out
