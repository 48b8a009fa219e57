# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled epoch kernels: SplitMix64 sampling + per-sample gradients + the
two-stage QHM (or SHB) update, fused into one loop per epoch.

Semantics match qhmlab.engine.fallback: identical index streams (bit-exact,
integer-only path) and identical floating-point operation order up to numpy's
vectorized transcendentals (compiled with -ffp-contract=off, so no FMA).
"""

from libc.math cimport exp, sqrt

import numpy as np


cdef inline unsigned long long _mix(unsigned long long z) noexcept nogil:
    z ^= z >> 30
    z = z * <unsigned long long>0xBF58476D1CE4E5B9UL
    z ^= z >> 27
    z = z * <unsigned long long>0x94D049BB133111EBUL
    z ^= z >> 31
    return z


cdef inline Py_ssize_t _draw(unsigned long long* state, unsigned long long n) noexcept nogil:
    state[0] = state[0] + <unsigned long long>0x9E3779B97F4A7C15UL
    cdef unsigned long long r = _mix(state[0])
    cdef unsigned long long hi = r >> 32
    cdef unsigned long long lo = r & <unsigned long long>0xFFFFFFFFUL
    # floor(r * n / 2^64) assembled from 32-bit halves
    return <Py_ssize_t>(((hi * n) + ((lo * n) >> 32)) >> 32)


cdef inline double _sigmoid_c(double u) noexcept nogil:
    cdef double e
    if u >= 0.0:
        return 1.0 / (1.0 + exp(-u))
    e = exp(u)
    return e / (1.0 + e)


cdef inline void _update(
    double[::1] x, double[::1] d, double[::1] g,
    double alpha, double beta, double gamma, int algo,
    double* max_d2, double* max_m2,
) noexcept nogil:
    cdef Py_ssize_t j
    cdef double m, dd = 0.0, mm = 0.0
    for j in range(x.shape[0]):
        if algo == 0:  # QHM, two-stage form
            d[j] = (1.0 - beta) * g[j] + beta * d[j]
            m = (1.0 - gamma) * g[j] + gamma * d[j]
        else:  # SHB
            m = g[j] + beta * d[j]
            d[j] = m
        x[j] = x[j] - alpha * m
        dd += d[j] * d[j]
        mm += m * m
    if dd > max_d2[0]:
        max_d2[0] = dd
    if mm > max_m2[0]:
        max_m2[0] = mm


def run_epoch_quadratic(
    double[::1] x, double[::1] d, state,
    const double[::1] a, const double[:, ::1] c,
    Py_ssize_t b, Py_ssize_t T,
    double alpha, double beta, double gamma, int algo,
):
    cdef unsigned long long st = state
    cdef Py_ssize_t n = c.shape[0], dim = x.shape[0]
    cdef Py_ssize_t t, i, j, idx
    buf = np.zeros(dim)
    gbuf = np.zeros(dim)
    cdef double[::1] s = buf
    cdef double[::1] g = gbuf
    cdef double max_d2 = 0.0, max_m2 = 0.0
    with nogil:
        for t in range(T):
            for j in range(dim):
                s[j] = 0.0
            for i in range(b):
                idx = _draw(&st, <unsigned long long>n)
                for j in range(dim):
                    s[j] += c[idx, j]
            for j in range(dim):
                g[j] = a[j] * (x[j] - s[j] / b)
            _update(x, d, g, alpha, beta, gamma, algo, &max_d2, &max_m2)
    return st, sqrt(max_d2), sqrt(max_m2)


def run_epoch_sigmoid(
    double[::1] x, double[::1] d, state,
    const double[:, ::1] A, const double[::1] tshift,
    Py_ssize_t b, Py_ssize_t T,
    double alpha, double beta, double gamma, int algo,
):
    cdef unsigned long long st = state
    cdef Py_ssize_t n = A.shape[0], dim = x.shape[0]
    cdef Py_ssize_t t, i, j, idx
    gbuf = np.zeros(dim)
    cdef double[::1] g = gbuf
    cdef double u, sv, w
    cdef double max_d2 = 0.0, max_m2 = 0.0
    with nogil:
        for t in range(T):
            for j in range(dim):
                g[j] = 0.0
            for i in range(b):
                idx = _draw(&st, <unsigned long long>n)
                u = 0.0
                for j in range(dim):
                    u += A[idx, j] * x[j]
                u -= tshift[idx]
                sv = _sigmoid_c(u)
                w = sv * (1.0 - sv)
                for j in range(dim):
                    g[j] += w * A[idx, j]
            for j in range(dim):
                g[j] = g[j] / b
            _update(x, d, g, alpha, beta, gamma, algo, &max_d2, &max_m2)
    return st, sqrt(max_d2), sqrt(max_m2)


def run_epoch_logistic(
    double[::1] x, double[::1] d, state,
    const double[:, ::1] U,
    Py_ssize_t b, Py_ssize_t T,
    double alpha, double beta, double gamma, int algo,
):
    cdef unsigned long long st = state
    cdef Py_ssize_t n = U.shape[0], dim = x.shape[0]
    cdef Py_ssize_t t, i, j, idx
    gbuf = np.zeros(dim)
    cdef double[::1] g = gbuf
    cdef double u, w
    cdef double max_d2 = 0.0, max_m2 = 0.0
    with nogil:
        for t in range(T):
            for j in range(dim):
                g[j] = 0.0
            for i in range(b):
                idx = _draw(&st, <unsigned long long>n)
                u = 0.0
                for j in range(dim):
                    u += U[idx, j] * x[j]
                w = _sigmoid_c(-u)
                for j in range(dim):
                    g[j] += w * U[idx, j]
            for j in range(dim):
                g[j] = -g[j] / b
            _update(x, d, g, alpha, beta, gamma, algo, &max_d2, &max_m2)
    return st, sqrt(max_d2), sqrt(max_m2)


def splitmix_selftest(state, Py_ssize_t n, Py_ssize_t count):
    """Draw `count` indices; used to verify bit-parity with the Python path."""
    cdef unsigned long long st = state
    out = np.empty(count, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i
    for i in range(count):
        o[i] = _draw(&st, <unsigned long long>n)
    return out, st
