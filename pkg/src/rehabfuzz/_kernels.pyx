# cython: language_level=3
"""Compiled inner loops. Signatures mirror :mod:`rehabfuzz._kernels_py`."""

import numpy as np

from libc.math cimport atan2, cos, sin, sqrt, fabs, M_PI

cdef double SNAP_EPS = 1e-12
cdef double AXIS_EPS = 1e-12

STATUS_OK = 0
STATUS_UNREACHABLE = 1
STATUS_SINGULAR = 2


cdef inline double _tri(double x, double a, double b, double c) nogil:
    if x == b:
        return 1.0
    if x <= a or x >= c:
        return 0.0
    if x < b:
        return (x - a) / (b - a)
    return (c - x) / (c - b)


cdef inline double _wrap(double a) nogil:
    # inputs here are sums of atan2 results, so |a| < 3*pi
    if a > M_PI:
        return a - 2.0 * M_PI
    if a <= -M_PI:
        return a + 2.0 * M_PI
    return a


def tri_mf(double[::1] x, double alpha, double beta, double gamma):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _tri(x[i], alpha, beta, gamma)
    return out


def aggregate_centroid(double lo, double hi, Py_ssize_t resolution,
                       double[::1] alphas, double[::1] betas, double[::1] gammas,
                       double[::1] heights):
    cdef Py_ssize_t i, k, m = alphas.shape[0]
    cdef double dx = (hi - lo) / resolution
    cdef double x, mu, agg, clipped
    cdef double moment = 0.0, mass = 0.0
    with nogil:
        for i in range(resolution):
            x = lo + (i + 0.5) * dx
            agg = 0.0
            for k in range(m):
                if heights[k] <= agg:
                    continue
                mu = _tri(x, alphas[k], betas[k], gammas[k])
                clipped = mu if mu < heights[k] else heights[k]
                if clipped > agg:
                    agg = clipped
            moment += x * agg
            mass += agg
    return moment, mass


def ik_batch(double l1, double l2, double l3, double[:, ::1] targets, int branch):
    cdef Py_ssize_t i, n = targets.shape[0]
    out = np.empty((n, 3), dtype=np.float64)
    status = np.zeros(n, dtype=np.int8)
    cdef double[:, ::1] q = out
    cdef signed char[::1] st = status
    cdef double x, y, z, rho, dz, c3, s3, sgn = 1.0 if branch >= 0 else -1.0
    cdef double denom = 2.0 * l2 * l3
    with nogil:
        for i in range(n):
            x = targets[i, 0]
            y = targets[i, 1]
            z = targets[i, 2]
            rho = sqrt(x * x + y * y)
            dz = z - l1
            c3 = (x * x + y * y + dz * dz - l2 * l2 - l3 * l3) / denom
            if fabs(c3) > 1.0 + SNAP_EPS:
                st[i] = 1
                q[i, 0] = q[i, 1] = q[i, 2] = 0.0
                continue
            if rho <= AXIS_EPS:
                st[i] = 2
                q[i, 0] = q[i, 1] = q[i, 2] = 0.0
                continue
            if c3 > 1.0:
                c3 = 1.0
            elif c3 < -1.0:
                c3 = -1.0
            s3 = sgn * sqrt(1.0 - c3 * c3)
            q[i, 0] = _wrap(atan2(y, x))
            q[i, 1] = _wrap(atan2(dz, rho) - atan2(l3 * s3, l2 + l3 * c3))
            q[i, 2] = _wrap(atan2(s3, c3))
    return out, status


def fk_batch(double l1, double l2, double l3, double[:, ::1] angles):
    cdef Py_ssize_t i, n = angles.shape[0]
    out = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] p = out
    cdef double t1, t2, t3, radial
    with nogil:
        for i in range(n):
            t1 = angles[i, 0]
            t2 = angles[i, 1]
            t3 = angles[i, 2]
            radial = l2 * cos(t2) + l3 * cos(t2 + t3)
            p[i, 0] = cos(t1) * radial
            p[i, 1] = sin(t1) * radial
            p[i, 2] = l1 + l2 * sin(t2) + l3 * sin(t2 + t3)
    return out


def trapezoid(double[::1] t, double[::1] v):
    cdef Py_ssize_t i, n = t.shape[0]
    cdef double acc = 0.0
    with nogil:
        for i in range(1, n):
            acc += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1])
    return acc
