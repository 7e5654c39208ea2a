# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the path simulators.

Every routine here has a twin in ``_fallback`` with identical floating-point
operation order, so both backends emit bit-identical paths (the bridge
minima go through libm ``log1p``/``expm1`` and may differ in the last ulp).
"""
import numpy as np

from libc.math cimport sqrt, exp, expm1, log1p


def norm3d_paths(double[::1] start, double scale, double[:, :, ::1] increments,
                 double[:, ::1] out):
    """Norm of ``start + scale * cumsum(increments)`` for every row."""
    cdef Py_ssize_t b = increments.shape[0]
    cdef Py_ssize_t n = increments.shape[1]
    cdef Py_ssize_t i, k
    cdef double x, y, z
    with nogil:
        for i in range(b):
            x = start[0]
            y = start[1]
            z = start[2]
            out[i, 0] = sqrt(x * x + y * y + z * z)
            for k in range(n):
                x = x + scale * increments[i, k, 0]
                y = y + scale * increments[i, k, 1]
                z = z + scale * increments[i, k, 2]
                out[i, k + 1] = sqrt(x * x + y * y + z * z)


def euler_paths(double r, double dt, double[:, ::1] normals, double[:, ::1] out,
                bint drift=True):
    """Euler steps of dR = dB + dt/R with reflection at 0; returns per-row reflect counts."""
    cdef Py_ssize_t b = normals.shape[0]
    cdef Py_ssize_t n = normals.shape[1]
    cdef Py_ssize_t i, k
    cdef double x, y
    cdef double sdt = sqrt(dt)
    reflects = np.zeros(b, dtype=np.int64)
    cdef long long[::1] rc = reflects
    with nogil:
        for i in range(b):
            x = r
            out[i, 0] = x
            for k in range(n):
                if drift:
                    y = x + sdt * normals[i, k] + dt / x
                else:
                    y = x + sdt * normals[i, k]
                if y <= 0.0:
                    y = -y
                    rc[i] += 1
                out[i, k + 1] = y
                x = y
    return reflects


def bes3_bridge_minima(double[:, ::1] values, double dt, double[:, ::1] uniforms,
                       double[:, ::1] out):
    """Sample the exact minimum of a BES(3) bridge over each grid interval."""
    cdef Py_ssize_t b = uniforms.shape[0]
    cdef Py_ssize_t n = uniforms.shape[1]
    cdef Py_ssize_t i, k
    cdef double x, y, q, c, d
    with nogil:
        for i in range(b):
            for k in range(n):
                x = values[i, k]
                y = values[i, k + 1]
                q = -expm1(-2.0 * x * y / dt)
                c = -0.5 * dt * log1p(-uniforms[i, k] * q)
                d = x - y
                out[i, k] = 0.5 * ((x + y) - sqrt(d * d + 4.0 * c))


def brownian_first_crossing(double x0, double level, double dt, double[::1] normals,
                            double[::1] uniforms, double[::1] out, Py_ssize_t limit):
    """Run a Brownian motion from ``x0`` until it crosses down through ``level``.

    ``out[0] = x0`` and ``out[j]`` holds the value after step ``j``. Returns the
    1-based step in which the crossing happened, or 0 if none within ``limit``
    steps. A step between two values above the level still counts as a crossing
    with the Brownian-bridge probability exp(-2 (x1-a)(x2-a) / dt).
    """
    cdef Py_ssize_t j
    cdef Py_ssize_t hit = 0
    cdef double x = x0
    cdef double y
    cdef double sdt = sqrt(dt)
    out[0] = x0
    with nogil:
        for j in range(limit):
            y = x + sdt * normals[j]
            if y <= level or uniforms[j] < exp(-2.0 * (x - level) * (y - level) / dt):
                hit = j + 1
                break
            out[j + 1] = y
            x = y
    return hit
