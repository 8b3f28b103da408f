"""Pure-Python fallback kernels.

Scalar evaluation walks plain Python lists with ``math.sin`` so that its
floating-point results are bitwise identical to the compiled kernels (both
sides call the platform libm with the same operation order). The grid
kernel vectorises with numpy, which may differ from libm by an ulp per
term; cross-backend grid comparisons therefore use a 1e-12 tolerance.
"""

import math

import numpy as np

from ..rng import Pcg32  # noqa: F401  (re-exported: backend RNG)

SINE = 0
SQUARE = 1

_TWO_PI = 2.0 * math.pi


def prepare(values):
    """Per-backend container for repeated scalar evaluation: a list."""
    return [float(v) for v in values]


def wave_objective(kind, g1x, g1y, g2x, g2y, gamma_rad, lam, psi):
    """Group contrast of the wave at one parameter point.

    Group sums accumulate in index order; the result is
    ``sum(f(g1))/n1 - sum(f(g2))/n2``.
    """
    sin = math.sin
    sg = sin(gamma_rad)
    cg = math.cos(gamma_rad)
    w = _TWO_PI / lam
    square = kind == SQUARE
    s1 = 0.0
    for i in range(len(g1x)):
        v = sin(w * (g1x[i] * sg - g1y[i] * cg) + psi)
        if square:
            v = (v > 0.0) - (v < 0.0)
        s1 += v
    s2 = 0.0
    for i in range(len(g2x)):
        v = sin(w * (g2x[i] * sg - g2y[i] * cg) + psi)
        if square:
            v = (v > 0.0) - (v < 0.0)
        s2 += v
    return s1 / len(g1x) - s2 / len(g2x)


def wave_objective_grid(kind, g1x, g1y, g2x, g2y, gammas_rad, lams, psis,
                        surface=None):
    """Objective over the full (gamma, lambda, psi) Cartesian grid.

    Returns ``(i, j, k, best)`` for the first (lexicographically smallest)
    maximising grid point; fills ``surface`` with all values when given.
    """
    g1x = np.asarray(g1x, dtype=float)
    g1y = np.asarray(g1y, dtype=float)
    g2x = np.asarray(g2x, dtype=float)
    g2y = np.asarray(g2y, dtype=float)
    lams = np.asarray(lams, dtype=float)
    psis = np.asarray(psis, dtype=float)
    n1 = g1x.shape[0]
    n2 = g2x.shape[0]
    w = _TWO_PI / lams  # (nl,)
    best = -math.inf
    bi = bj = bk = 0
    for i, g in enumerate(gammas_rad):
        sg = math.sin(g)
        cg = math.cos(g)
        x1 = g1x * sg - g1y * cg  # (n1,)
        x2 = g2x * sg - g2y * cg
        t1 = w[:, None] * x1[None, :]  # (nl, n1)
        t2 = w[:, None] * x2[None, :]
        v1 = np.sin(t1[:, None, :] + psis[None, :, None])  # (nl, np, n1)
        v2 = np.sin(t2[:, None, :] + psis[None, :, None])
        if kind == SQUARE:
            v1 = np.sign(v1)
            v2 = np.sign(v2)
        plane = v1.sum(axis=2) / n1 - v2.sum(axis=2) / n2  # (nl, np)
        if surface is not None:
            surface[i] = plane
        flat = int(np.argmax(plane))
        j, k = divmod(flat, plane.shape[1])
        if plane[j, k] > best:
            best = float(plane[j, k])
            bi, bj, bk = i, j, k
    return bi, bj, bk, best
