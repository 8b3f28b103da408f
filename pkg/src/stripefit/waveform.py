"""Oriented periodic waveforms and the group-contrast objective.

Positions are projected onto the stripe normal, ``X = x sin(g) - y cos(g)``
with the orientation ``g`` measured from the x-axis, and scored with
``sin(2 pi X / wavelength + phase)`` either directly (sine) or through the
signum (square). The objective puts group 1 on positive wave values and
group 2 on negative ones, normalised per group, so a perfect alternating
stripe arrangement scores 2 and a perfectly swapped one scores -2.

Angles are degrees at the API boundary and radians internally.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import errors
from . import _kernels

_TWO_PI = 2.0 * math.pi
_DEG2RAD = math.pi / 180.0


class WaveKind(enum.Enum):
    SINE = "sine"
    SQUARE = "square"

    @property
    def code(self) -> int:
        return _kernels.SINE if self is WaveKind.SINE else _kernels.SQUARE

    @classmethod
    def parse(cls, name: str) -> "WaveKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise errors.ConfigError(f"unknown waveform {name!r}") from None


@dataclass(frozen=True)
class WaveParams:
    """Stripe orientation (deg), wavelength (m) and phase (rad)."""

    gamma_deg: float
    lambda_m: float
    psi_rad: float

    def __post_init__(self):
        if not (math.isfinite(self.lambda_m) and self.lambda_m > 0.0):
            raise errors.InvalidWavelengthError(
                f"wavelength must be positive and finite, got {self.lambda_m!r}")
        if not (math.isfinite(self.gamma_deg) and math.isfinite(self.psi_rad)):
            raise errors.ConfigError("wave parameters must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.gamma_deg, self.lambda_m, self.psi_rad)

    @property
    def is_canonical(self) -> bool:
        return 0.0 <= self.gamma_deg < 180.0 and 0.0 <= self.psi_rad < _TWO_PI


def rotated_coord(pos, gamma_deg: float) -> float:
    """Signed coordinate of ``pos`` along the stripe normal."""
    g = gamma_deg * _DEG2RAD
    return pos[0] * math.sin(g) - pos[1] * math.cos(g)


def eval_wave(kind: WaveKind, pos, params: WaveParams) -> float:
    """Wave value at one position, in [-1, 1]."""
    w = _TWO_PI / params.lambda_m
    v = math.sin(w * rotated_coord(pos, params.gamma_deg) + params.psi_rad)
    if kind is WaveKind.SQUARE:
        return float((v > 0.0) - (v < 0.0))
    return v


def objective(kind: WaveKind, frame, params: WaveParams) -> float:
    """Group-contrast score of the wave on one frame; in [-2, 2]."""
    if frame.n1 == 0 or frame.n2 == 0:
        raise errors.GroupEmptyError("objective requires both groups non-empty")
    return _kernels.wave_objective(
        kind.code, frame.g1x, frame.g1y, frame.g2x, frame.g2y,
        params.gamma_deg * _DEG2RAD, params.lambda_m, params.psi_rad)


def canonicalize(params: WaveParams) -> WaveParams:
    """Equivalent parameters with gamma in [0, 180) and psi in [0, 2 pi).

    Uses the identity that adding 180 degrees to the orientation flips the
    sign of the projected coordinate, which is undone by mapping the phase
    to ``pi - psi``; the wave value at every position is unchanged.
    """
    gamma = params.gamma_deg % 360.0
    psi = params.psi_rad
    if gamma >= 180.0:
        gamma -= 180.0
        psi = math.pi - psi
    psi %= _TWO_PI
    return WaveParams(gamma, params.lambda_m, psi)
