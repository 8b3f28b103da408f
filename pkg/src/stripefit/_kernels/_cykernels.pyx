# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: waveform objective, grid evaluation, and PCG32.

Scalar evaluation mirrors the pure-Python kernels operation for operation
(same libm calls, same accumulation order) so both backends produce
bitwise-identical scalar objective values and RNG streams.
"""

from libc.math cimport sin, cos, log, sqrt, M_PI, INFINITY
from libc.stdint cimport uint32_t, uint64_t
from libc.stdlib cimport malloc, free

import numpy as np

SINE = 0
SQUARE = 1

cdef double TWO_PI = 2.0 * M_PI
cdef double TWO53_INV = 2.0 ** -53


def prepare(values):
    """Per-backend container for repeated scalar evaluation: a C buffer."""
    return np.ascontiguousarray(values, dtype=np.float64)


cpdef double wave_objective(int kind, const double[::1] g1x,
                            const double[::1] g1y,
                            const double[::1] g2x,
                            const double[::1] g2y,
                            double gamma_rad, double lam, double psi):
    """Group contrast of the wave at one parameter point."""
    cdef double sg = sin(gamma_rad)
    cdef double cg = cos(gamma_rad)
    cdef double w = TWO_PI / lam
    cdef double s1 = 0.0, s2 = 0.0, v
    cdef Py_ssize_t i
    cdef Py_ssize_t n1 = g1x.shape[0]
    cdef Py_ssize_t n2 = g2x.shape[0]
    cdef bint square = kind == SQUARE
    for i in range(n1):
        v = sin(w * (g1x[i] * sg - g1y[i] * cg) + psi)
        if square:
            v = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
        s1 += v
    for i in range(n2):
        v = sin(w * (g2x[i] * sg - g2y[i] * cg) + psi)
        if square:
            v = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
        s2 += v
    return s1 / n1 - s2 / n2


def wave_objective_grid(int kind, const double[::1] g1x,
                        const double[::1] g1y, const double[::1] g2x,
                        const double[::1] g2y, const double[::1] gammas_rad,
                        const double[::1] lams, const double[::1] psis,
                        surface=None):
    """Objective over the full (gamma, lambda, psi) Cartesian grid.

    Returns ``(i, j, k, best)`` for the first (lexicographically smallest)
    maximising grid point; fills ``surface`` with all values when given.
    """
    cdef Py_ssize_t ng = gammas_rad.shape[0]
    cdef Py_ssize_t nl = lams.shape[0]
    cdef Py_ssize_t nr = psis.shape[0]
    cdef Py_ssize_t n1 = g1x.shape[0]
    cdef Py_ssize_t n2 = g2x.shape[0]
    cdef double[:, :, ::1] surf_view = None
    cdef bint want_surface = surface is not None
    if want_surface:
        surf_view = surface
    cdef double *x1 = <double *> malloc(n1 * sizeof(double))
    cdef double *x2 = <double *> malloc(n2 * sizeof(double))
    cdef double *t1 = <double *> malloc(n1 * sizeof(double))
    cdef double *t2 = <double *> malloc(n2 * sizeof(double))
    if x1 == NULL or x2 == NULL or t1 == NULL or t2 == NULL:
        free(x1); free(x2); free(t1); free(t2)
        raise MemoryError("grid scratch allocation failed")
    cdef double best = -INFINITY
    cdef Py_ssize_t bi = 0, bj = 0, bk = 0
    cdef Py_ssize_t i, j, k, a
    cdef double sg, cg, w, psi, s1, s2, v, val
    cdef bint square = kind == SQUARE
    try:
        with nogil:
            for i in range(ng):
                sg = sin(gammas_rad[i])
                cg = cos(gammas_rad[i])
                for a in range(n1):
                    x1[a] = g1x[a] * sg - g1y[a] * cg
                for a in range(n2):
                    x2[a] = g2x[a] * sg - g2y[a] * cg
                for j in range(nl):
                    w = TWO_PI / lams[j]
                    for a in range(n1):
                        t1[a] = w * x1[a]
                    for a in range(n2):
                        t2[a] = w * x2[a]
                    for k in range(nr):
                        psi = psis[k]
                        s1 = 0.0
                        for a in range(n1):
                            v = sin(t1[a] + psi)
                            if square:
                                v = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
                            s1 += v
                        s2 = 0.0
                        for a in range(n2):
                            v = sin(t2[a] + psi)
                            if square:
                                v = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
                            s2 += v
                        val = s1 / n1 - s2 / n2
                        if want_surface:
                            surf_view[i, j, k] = val
                        if val > best:
                            best = val
                            bi = i; bj = j; bk = k
    finally:
        free(x1); free(x2); free(t1); free(t2)
    return bi, bj, bk, best


cdef class Pcg32:
    """PCG32 generator; stream-compatible with stripefit.rng.Pcg32."""

    cdef uint64_t state
    cdef uint64_t inc

    def __init__(self, seed, stream=0):
        cdef uint64_t s = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
        cdef uint64_t st = <uint64_t> (int(stream) & 0xFFFFFFFFFFFFFFFF)
        self.state = 0
        self.inc = (st << 1) | 1
        self._next()
        self.state = self.state + s
        self._next()

    cdef inline uint32_t _next(self) nogil:
        cdef uint64_t old = self.state
        self.state = old * (<uint64_t> 6364136223846793005UL) + self.inc
        cdef uint32_t xorshifted = <uint32_t> (((old >> 18) ^ old) >> 27)
        cdef uint32_t rot = <uint32_t> (old >> 59)
        return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))

    def next_u32(self):
        return self._next()

    cpdef double next_double(self):
        cdef uint64_t hi = <uint64_t> self._next()
        cdef uint64_t lo = <uint64_t> self._next()
        return <double> (((hi << 32) | lo) >> 11) * TWO53_INV

    cpdef double uniform(self, double lo, double hi):
        return lo + (hi - lo) * self.next_double()

    cpdef double normal(self):
        cdef uint64_t hi = <uint64_t> self._next()
        cdef uint64_t lo = <uint64_t> self._next()
        cdef double u1 = <double> ((((hi << 32) | lo) >> 11) + 1) * TWO53_INV
        cdef double u2 = self.next_double()
        return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)
