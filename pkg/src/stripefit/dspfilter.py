"""Zero-phase Butterworth low-pass filtering of coordinate time series.

The forward-backward pass squares the magnitude response and cancels the
phase. Edges are handled by odd-reflection padding of length
``3 * (order + 1)`` with steady-state initial conditions matched to the
first padded sample, applied independently to x(t) and y(t) per pedestrian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import errors
from .model import TrackSample, Trial


@dataclass(frozen=True)
class IIRCoeffs:
    """Transfer-function coefficients b/a with a[0] = 1."""

    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or b.ndim != 1 or len(a) < 2:
            raise errors.ConfigError("coefficient arrays must be 1-D")
        if a[0] != 1.0:
            b = b / a[0]
            a = a / a[0]
        if np.abs(np.roots(a)).max() >= 1.0:
            raise errors.ConfigError("unstable filter: pole on/outside unit circle")
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def order(self) -> int:
        return len(self.a) - 1

    def magnitude(self, freq_hz: float, fs_hz: float) -> float:
        """|H| at one frequency for a single forward pass."""
        w = 2.0 * math.pi * freq_hz / fs_hz
        z = np.exp(-1j * w * np.arange(len(self.b)))
        return float(abs(np.dot(self.b, z) / np.dot(self.a, z)))


def butter_lowpass(order: int, cutoff_hz: float, fs_hz: float) -> IIRCoeffs:
    """Digital Butterworth low-pass via bilinear transform with prewarping."""
    if order not in (2, 4):
        raise errors.ConfigError(f"filter order must be 2 or 4, got {order!r}")
    if not 0.0 < cutoff_hz < fs_hz / 2.0:
        raise errors.InvalidCutoffError(
            f"cutoff {cutoff_hz!r} Hz must lie in (0, {fs_hz / 2.0}) Hz")
    b, a = signal.butter(order, cutoff_hz, btype="low", fs=fs_hz)
    return IIRCoeffs(b=b, a=a)


def filtfilt(coeffs: IIRCoeffs, series) -> np.ndarray:
    """Forward-backward application of the filter (zero phase)."""
    x = np.asarray(series, dtype=float)
    padlen = 3 * (coeffs.order + 1)
    if x.ndim != 1:
        raise errors.ConfigError("filtfilt expects a 1-D series")
    if len(x) < 3 * padlen:
        raise errors.ShortSeriesError(
            f"series length {len(x)} < {3 * padlen} (3x pad length)")
    return signal.filtfilt(coeffs.b, coeffs.a, x, padtype="odd",
                           padlen=padlen, method="pad")


def filter_trial(trial: Trial, cutoff_hz: float = 0.5, order: int = 4) -> Trial:
    """New trial with every pedestrian's x(t) and y(t) low-pass filtered."""
    coeffs = butter_lowpass(order, cutoff_hz, trial.sample_rate_hz)
    by_ped: dict[str, list[TrackSample]] = {}
    for s in trial.samples:
        by_ped.setdefault(s.pedestrian_id, []).append(s)
    out: list[TrackSample] = []
    for ped in sorted(by_ped):
        ss = by_ped[ped]
        try:
            xs = filtfilt(coeffs, [s.x for s in ss])
            ys = filtfilt(coeffs, [s.y for s in ss])
        except errors.ShortSeriesError as exc:
            raise errors.ShortSeriesError(
                f"trial {trial.trial_id!r}, pedestrian {ped!r}: {exc}") from None
        out.extend(TrackSample(s.pedestrian_id, s.group, s.t, float(x), float(y))
                   for s, x, y in zip(ss, xs, ys))
    out.sort(key=lambda s: (s.pedestrian_id, s.t))
    return Trial(trial_id=trial.trial_id,
                 crossing_angle_deg=trial.crossing_angle_deg,
                 sample_rate_hz=trial.sample_rate_hz,
                 samples=tuple(out),
                 bisector=trial.bisector)
