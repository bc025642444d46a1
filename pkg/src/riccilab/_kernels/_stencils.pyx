# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled periodic stencil kernels (hot inner loops).

Mirrors the signatures in ``_numpy_backend``; selected at import by
``riccilab._kernels``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def lap5(const double[:, ::1] f, double h1, double h2):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double c1 = 1.0 / (h1 * h1), c2 = 1.0 / (h2 * h2)
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n1):
        im = n1 - 1 if i == 0 else i - 1
        ip = 0 if i == n1 - 1 else i + 1
        for j in range(n2):
            jm = n2 - 1 if j == 0 else j - 1
            jp = 0 if j == n2 - 1 else j + 1
            out[i, j] = (f[im, j] - 2.0 * f[i, j] + f[ip, j]) * c1 \
                + (f[i, jm] - 2.0 * f[i, j] + f[i, jp]) * c2
    return out_arr


def diff_x(const double[:, ::1] f, double h1):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1]
    cdef Py_ssize_t i, j, im, ip
    cdef double c = 1.0 / (2.0 * h1)
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n1):
        im = n1 - 1 if i == 0 else i - 1
        ip = 0 if i == n1 - 1 else i + 1
        for j in range(n2):
            out[i, j] = (f[ip, j] - f[im, j]) * c
    return out_arr


def diff_y(const double[:, ::1] f, double h2):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1]
    cdef Py_ssize_t i, j, jm, jp
    cdef double c = 1.0 / (2.0 * h2)
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n1):
        for j in range(n2):
            jm = n2 - 1 if j == 0 else j - 1
            jp = 0 if j == n2 - 1 else j + 1
            out[i, j] = (f[i, jp] - f[i, jm]) * c
    return out_arr


def diff_xx(const double[:, ::1] f, double h1):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1]
    cdef Py_ssize_t i, j, im, ip
    cdef double c = 1.0 / (h1 * h1)
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n1):
        im = n1 - 1 if i == 0 else i - 1
        ip = 0 if i == n1 - 1 else i + 1
        for j in range(n2):
            out[i, j] = (f[im, j] - 2.0 * f[i, j] + f[ip, j]) * c
    return out_arr


def diff_yy(const double[:, ::1] f, double h2):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1]
    cdef Py_ssize_t i, j, jm, jp
    cdef double c = 1.0 / (h2 * h2)
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n1):
        for j in range(n2):
            jm = n2 - 1 if j == 0 else j - 1
            jp = 0 if j == n2 - 1 else j + 1
            out[i, j] = (f[i, jm] - 2.0 * f[i, j] + f[i, jp]) * c
    return out_arr


def diff_xy(const double[:, ::1] f, double h1, double h2):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double c = 1.0 / (4.0 * h1 * h2)
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n1):
        im = n1 - 1 if i == 0 else i - 1
        ip = 0 if i == n1 - 1 else i + 1
        for j in range(n2):
            jm = n2 - 1 if j == 0 else j - 1
            jp = 0 if j == n2 - 1 else j + 1
            out[i, j] = (f[ip, jp] - f[ip, jm] - f[im, jp] + f[im, jm]) * c
    return out_arr


def dirichlet_energy(const double[:, ::1] f, double h1, double h2):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1]
    cdef Py_ssize_t i, j, ip, jp
    cdef double acc = 0.0, dx, dy
    for i in range(n1):
        ip = 0 if i == n1 - 1 else i + 1
        for j in range(n2):
            jp = 0 if j == n2 - 1 else j + 1
            dx = (f[ip, j] - f[i, j]) / h1
            dy = (f[i, jp] - f[i, j]) / h2
            acc += dx * dx + dy * dy
    return acc * h1 * h2
