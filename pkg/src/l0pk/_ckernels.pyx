# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled componentwise kernels; twin of ``_pykernels``."""
import numpy as np

from libc.math cimport fabs, sqrt

NAME = "cython"


cdef inline double _clamp(double x, double lo, double hi) nogil:
    # same semantics as np.minimum(np.maximum(x, lo), hi)
    if x < lo:
        x = lo
    if x > hi:
        x = hi
    return x


cdef inline double _prox1(double c, double lam, double gamma, double lo, double hi,
                          bint keep_ties) nogil:
    cdef double p = _clamp(c, lo, hi)
    cdef double a, d, h_nz, h_zero
    cdef bint keep
    if lo > 0.0 or hi < 0.0:
        return p + 0.0
    if lo <= c <= hi:
        a = fabs(c)
        keep = a >= gamma if keep_ties else a > gamma
    else:
        d = p - c
        h_nz = lam + 0.5 * (d * d)
        h_zero = 0.5 * (c * c)
        keep = h_nz <= h_zero if keep_ties else h_nz < h_zero
    if keep:
        return p + 0.0
    return 0.0


def project_box(const double[::1] x, const double[::1] lower, const double[::1] upper):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _clamp(x[i], lower[i], upper[i]) + 0.0
    return out


def soft_threshold(const double[::1] c, double lam):
    cdef Py_ssize_t i, n = c.shape[0]
    cdef double a
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            a = fabs(c[i]) - lam
            if a > 0.0:
                o[i] = a if c[i] > 0.0 else -a
            else:
                o[i] = 0.0
    return out


def hard_threshold(const double[::1] c, double gamma, bint keep_ties):
    cdef Py_ssize_t i, n = c.shape[0]
    cdef double a
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            a = fabs(c[i])
            if (a >= gamma) if keep_ties else (a > gamma):
                o[i] = c[i] + 0.0
            else:
                o[i] = 0.0
    return out


def prox_l0_box_1d(double c, double lam, double lo, double hi, bint keep_ties):
    return _prox1(c, lam, sqrt(2.0 * lam), lo, hi, keep_ties)


def prox_l0_box(const double[::1] c, double lam, const double[::1] lower,
                const double[::1] upper, penalized, bint keep_ties):
    cdef Py_ssize_t i, n = c.shape[0]
    cdef double gamma = sqrt(2.0 * lam)
    cdef const unsigned char[::1] pen
    cdef bint masked = penalized is not None
    out = np.empty(n)
    cdef double[::1] o = out
    if masked:
        pen = np.ascontiguousarray(penalized, dtype=np.uint8)
    with nogil:
        for i in range(n):
            if masked and not pen[i]:
                o[i] = _clamp(c[i], lower[i], upper[i]) + 0.0
            else:
                o[i] = _prox1(c[i], lam, gamma, lower[i], upper[i], keep_ties)
    return out
