"""Seeded random number generation.

Every stochastic component (annealing proposals, synthetic jitter) draws
from PCG32 (the XSH-RR 64/32 permuted congruential generator), implemented
here in pure Python and mirrored bit-for-bit by the compiled kernels. The
draw protocol is part of the reproducibility contract:

* ``next_u32``     -- one PCG32 step.
* ``next_double``  -- two u32 draws combined into a 53-bit mantissa,
  uniform on [0, 1).
* ``normal``       -- Box-Muller using two further uniforms: the first is
  shifted into (0, 1] for the logarithm, one normal per call (no caching).
* ``uniform(a,b)`` -- ``a + (b - a) * next_double()``.

Seeds recorded in outputs plus this protocol reproduce any run exactly.
"""

import hashlib
import math

_M64 = (1 << 64) - 1
_M32 = (1 << 32) - 1
_PCG_MULT = 6364136223846793005
_TWO53_INV = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


class Pcg32:
    """PCG32 generator with explicit (seed, stream) initialisation."""

    __slots__ = ("state", "inc")

    def __init__(self, seed, stream=0):
        self.state = 0
        self.inc = ((int(stream) << 1) | 1) & _M64
        self.next_u32()
        self.state = (self.state + (int(seed) & _M64)) & _M64
        self.next_u32()

    def next_u32(self):
        old = self.state
        self.state = (old * _PCG_MULT + self.inc) & _M64
        xorshifted = (((old >> 18) ^ old) >> 27) & _M32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))) & _M32

    def next_double(self):
        hi = self.next_u32()
        lo = self.next_u32()
        return (((hi << 32) | lo) >> 11) * _TWO53_INV

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.next_double()

    def normal(self):
        hi = self.next_u32()
        lo = self.next_u32()
        u1 = ((((hi << 32) | lo) >> 11) + 1) * _TWO53_INV
        u2 = self.next_double()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


def derive_seed(*parts):
    """Stable 64-bit seed from arbitrary string/number parts.

    Hash-based so batch-row seeds do not depend on execution order or on
    Python's per-process hash randomisation.
    """
    h = hashlib.sha256()
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")
