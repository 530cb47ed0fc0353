# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels: one-axis derivatives and the fused field
operators built from them.  Semantics match kernels._numpy_ref exactly."""

import numpy as np

cimport numpy as cnp


cdef void _dx(double[:, :, ::1] f, double[:, :, ::1] out, double h, bint periodic) noexcept nogil:
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], nz = f.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double c = 0.5 / h
    for i in range(1, nx - 1):
        for j in range(ny):
            for k in range(nz):
                out[i, j, k] = (f[i + 1, j, k] - f[i - 1, j, k]) * c
    if periodic:
        for j in range(ny):
            for k in range(nz):
                out[0, j, k] = (f[1, j, k] - f[nx - 1, j, k]) * c
                out[nx - 1, j, k] = (f[0, j, k] - f[nx - 2, j, k]) * c
    else:
        for j in range(ny):
            for k in range(nz):
                out[0, j, k] = (-3.0 * f[0, j, k] + 4.0 * f[1, j, k] - f[2, j, k]) * c
                out[nx - 1, j, k] = (3.0 * f[nx - 1, j, k] - 4.0 * f[nx - 2, j, k] + f[nx - 3, j, k]) * c


cdef void _dy(double[:, :, ::1] f, double[:, :, ::1] out, double h, bint periodic) noexcept nogil:
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], nz = f.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double c = 0.5 / h
    for i in range(nx):
        for j in range(1, ny - 1):
            for k in range(nz):
                out[i, j, k] = (f[i, j + 1, k] - f[i, j - 1, k]) * c
        if periodic:
            for k in range(nz):
                out[i, 0, k] = (f[i, 1, k] - f[i, ny - 1, k]) * c
                out[i, ny - 1, k] = (f[i, 0, k] - f[i, ny - 2, k]) * c
        else:
            for k in range(nz):
                out[i, 0, k] = (-3.0 * f[i, 0, k] + 4.0 * f[i, 1, k] - f[i, 2, k]) * c
                out[i, ny - 1, k] = (3.0 * f[i, ny - 1, k] - 4.0 * f[i, ny - 2, k] + f[i, ny - 3, k]) * c


cdef void _dz(double[:, :, ::1] f, double[:, :, ::1] out, double h, bint periodic) noexcept nogil:
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], nz = f.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double c = 0.5 / h
    for i in range(nx):
        for j in range(ny):
            for k in range(1, nz - 1):
                out[i, j, k] = (f[i, j, k + 1] - f[i, j, k - 1]) * c
            if periodic:
                out[i, j, 0] = (f[i, j, 1] - f[i, j, nz - 1]) * c
                out[i, j, nz - 1] = (f[i, j, 0] - f[i, j, nz - 2]) * c
            else:
                out[i, j, 0] = (-3.0 * f[i, j, 0] + 4.0 * f[i, j, 1] - f[i, j, 2]) * c
                out[i, j, nz - 1] = (3.0 * f[i, j, nz - 1] - 4.0 * f[i, j, nz - 2] + f[i, j, nz - 3]) * c


cdef void _diff(double[:, :, ::1] f, double[:, :, ::1] out, int axis, double h, bint periodic) noexcept nogil:
    if axis == 0:
        _dx(f, out, h, periodic)
    elif axis == 1:
        _dy(f, out, h, periodic)
    else:
        _dz(f, out, h, periodic)


cdef void _isub(double[:, :, ::1] a, double[:, :, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j, k
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(a.shape[2]):
                a[i, j, k] -= b[i, j, k]


cdef void _iadd(double[:, :, ::1] a, double[:, :, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j, k
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(a.shape[2]):
                a[i, j, k] += b[i, j, k]


def diff3(f, int axis, double h, bint periodic, out=None):
    """Derivative of a (nx, ny, nz) float64 array along one axis."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    if out is None:
        out = np.empty_like(f)
    cdef double[:, :, ::1] fv = f
    cdef double[:, :, ::1] ov = out
    with nogil:
        _diff(fv, ov, axis, h, periodic)
    return out


def grad_vec(u, spacing, bint periodic, out=None):
    """Gradient of a (3, nx, ny, nz) vector field: out[i, j] = d_j u_i."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if out is None:
        out = np.empty((3, 3) + u.shape[1:], dtype=np.float64)
    cdef double h0 = spacing[0], h1 = spacing[1], h2 = spacing[2]
    cdef double[:, :, :, ::1] uv = u
    cdef double[:, :, :, :, ::1] ov = out
    cdef int i
    with nogil:
        for i in range(3):
            _diff(uv[i], ov[i, 0], 0, h0, periodic)
            _diff(uv[i], ov[i, 1], 1, h1, periodic)
            _diff(uv[i], ov[i, 2], 2, h2, periodic)
    return out


def curl_rows(P, spacing, bint periodic, out=None):
    """Row-wise curl of a (3, 3, nx, ny, nz) tensor field."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    if out is None:
        out = np.empty_like(P)
    scratch = np.empty(P.shape[2:], dtype=np.float64)
    cdef double h0 = spacing[0], h1 = spacing[1], h2 = spacing[2]
    cdef double[:, :, :, :, ::1] Pv = P
    cdef double[:, :, :, :, ::1] ov = out
    cdef double[:, :, ::1] sv = scratch
    cdef int i
    with nogil:
        for i in range(3):
            # (curl v)_0 = d_1 v_2 - d_2 v_1
            _diff(Pv[i, 2], ov[i, 0], 1, h1, periodic)
            _diff(Pv[i, 1], sv, 2, h2, periodic)
            _isub(ov[i, 0], sv)
            # (curl v)_1 = d_2 v_0 - d_0 v_2
            _diff(Pv[i, 0], ov[i, 1], 2, h2, periodic)
            _diff(Pv[i, 2], sv, 0, h0, periodic)
            _isub(ov[i, 1], sv)
            # (curl v)_2 = d_0 v_1 - d_1 v_0
            _diff(Pv[i, 1], ov[i, 2], 0, h0, periodic)
            _diff(Pv[i, 0], sv, 1, h1, periodic)
            _isub(ov[i, 2], sv)
    return out


def div_rows(S, spacing, bint periodic, out=None):
    """Row-wise divergence of a (3, 3, nx, ny, nz) tensor field."""
    S = np.ascontiguousarray(S, dtype=np.float64)
    if out is None:
        out = np.empty((3,) + S.shape[2:], dtype=np.float64)
    scratch = np.empty(S.shape[2:], dtype=np.float64)
    cdef double h0 = spacing[0], h1 = spacing[1], h2 = spacing[2]
    cdef double[:, :, :, :, ::1] Sv = S
    cdef double[:, :, :, ::1] ov = out
    cdef double[:, :, ::1] sv = scratch
    cdef int i
    with nogil:
        for i in range(3):
            _diff(Sv[i, 0], ov[i], 0, h0, periodic)
            _diff(Sv[i, 1], sv, 1, h1, periodic)
            _iadd(ov[i], sv)
            _diff(Sv[i, 2], sv, 2, h2, periodic)
            _iadd(ov[i], sv)
    return out
