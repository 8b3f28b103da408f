"""Synthetic data with known stripe ground truth.

``generate_striped_frame`` places group 1 on positive half-wave centres and
group 2 on negative ones, so at zero jitter both the sine and the square
objective reach exactly 2 at the true parameters. ``generate_crossing_trial``
builds a whole recording: two rigid lattice formations whose bands interleave
into alternating stripes (orientation 90 degrees in the bisector frame)
around the mid-trial meeting time, and which keep that alternation while
they pass through each other because both groups share the same velocity
component along the bisector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors
from ._kernels import Pcg32
from .model import Frame, TrackSample, Trial
from .waveform import WaveParams

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class StripeSpec:
    """Ground truth and sampling controls for one striped frame."""

    gamma_deg: float = 90.0
    lambda_m: float = 2.0
    psi_rad: float = 0.0
    n1: int = 18
    n2: int = 18
    jitter_sd_m: float = 0.0
    extent_m: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise errors.ConfigError("group sizes must be >= 1")
        if self.jitter_sd_m < 0:
            raise errors.ConfigError("jitter_sd_m must be >= 0")
        if self.lambda_m <= 0:
            raise errors.InvalidWavelengthError(
                f"lambda_m must be positive, got {self.lambda_m!r}")
        if self.extent_m <= 0:
            raise errors.ConfigError("extent_m must be positive")


def _line_offsets(lambda_m: float, psi_rad: float, extent_m: float,
                  quarter: float) -> list[float]:
    """Stripe-normal offsets of half-wave centres inside the extent.

    ``quarter`` is 0.25 for crests (group 1) and 0.75 for troughs.
    """
    shift = psi_rad * lambda_m / _TWO_PI
    k_lo = math.ceil((-extent_m + shift) / lambda_m - quarter)
    k_hi = math.floor((extent_m + shift) / lambda_m - quarter)
    return [lambda_m * (k + quarter) - shift for k in range(k_lo, k_hi + 1)]


def generate_striped_frame(spec: StripeSpec) -> tuple[Frame, WaveParams]:
    """Frame with groups on alternating stripes plus Gaussian jitter.

    Points are assigned round-robin to the stripe lines inside the extent
    and spread uniformly along them; jitter displacements are drawn after
    all placements so the underlying geometry is identical across jitter
    levels for one seed.
    """
    g = math.radians(spec.gamma_deg)
    normal = np.array([math.sin(g), -math.cos(g)])
    along = np.array([math.cos(g), math.sin(g)])
    crests = _line_offsets(spec.lambda_m, spec.psi_rad, spec.extent_m, 0.25)
    troughs = _line_offsets(spec.lambda_m, spec.psi_rad, spec.extent_m, 0.75)
    if not crests or not troughs:
        raise errors.EmptyGenerationError(
            f"extent {spec.extent_m} m holds no full stripe pair of "
            f"wavelength {spec.lambda_m} m")
    rng = Pcg32(spec.seed)
    s1 = [rng.uniform(-spec.extent_m, spec.extent_m) for _ in range(spec.n1)]
    s2 = [rng.uniform(-spec.extent_m, spec.extent_m) for _ in range(spec.n2)]
    jit = [(rng.normal() * spec.jitter_sd_m, rng.normal() * spec.jitter_sd_m)
           for _ in range(spec.n1 + spec.n2)]
    g1 = [crests[i % len(crests)] * normal + s1[i] * along + jit[i]
          for i in range(spec.n1)]
    g2 = [troughs[i % len(troughs)] * normal + s2[i] * along
          + jit[spec.n1 + i] for i in range(spec.n2)]
    frame = Frame(t=0.0, g1=np.array(g1), g2=np.array(g2))
    truth = WaveParams(spec.gamma_deg, spec.lambda_m, spec.psi_rad)
    return frame, truth


def generate_crossing_trial(angle_deg: float, n1: int = 18, n2: int = 18,
                            speed_mps: float = 1.3, duration_s: float = 8.0,
                            fs_hz: float = 120.0,
                            lateral_spacing_m: float = 0.6,
                            seed: int = 0, *,
                            wavelength_m: float = 2.0,
                            jitter_sd_m: float = 0.0,
                            bands_per_group: int | None = None,
                            trial_id: str | None = None) -> Trial:
    """Trial of two lattice formations crossing at ``angle_deg``.

    Groups move at +/- angle/2 from the +x axis (the bisector; at 180
    degrees the flows are antiparallel along y and the +x convention is
    kept) and meet at the origin mid-trial, where the formation is a
    striped frame with orientation 90 degrees, wavelength ``wavelength_m``
    and phase 0. Deterministic per seed.
    """
    if not (math.isfinite(angle_deg) and 0.0 < angle_deg <= 180.0):
        raise errors.ConfigError(
            f"crossing angle must be in (0, 180], got {angle_deg!r}")
    if fs_hz <= 0 or duration_s <= 0:
        raise errors.ConfigError("fs_hz and duration_s must be positive")
    half = math.radians(angle_deg) / 2.0
    v1 = np.array([math.cos(half), math.sin(half)]) * speed_mps
    v2 = np.array([math.cos(half), -math.sin(half)]) * speed_mps
    t_mid = duration_s / 2.0

    rng = Pcg32(seed)
    mids = {1: _formation(n1, bands_per_group, wavelength_m,
                          lateral_spacing_m, crest=True),
            2: _formation(n2, bands_per_group, wavelength_m,
                          lateral_spacing_m, crest=False)}
    for group in (1, 2):
        jitter = np.array([(rng.normal() * jitter_sd_m,
                            rng.normal() * jitter_sd_m)
                           for _ in range(len(mids[group]))])
        mids[group] = mids[group] + jitter

    n_steps = int(round(duration_s * fs_hz)) + 1
    samples: list[TrackSample] = []
    for group, vel in ((1, v1), (2, v2)):
        width = len(str(max(n1, n2) - 1))
        for p, mid in enumerate(mids[group]):
            ped = f"g{group}_{p:0{width}d}"
            for k in range(n_steps):
                t = k / fs_hz
                pos = mid + vel * (t - t_mid)
                samples.append(TrackSample(ped, group, t,
                                           float(pos[0]), float(pos[1])))
    samples.sort(key=lambda s: (s.pedestrian_id, s.t))
    tid = trial_id or f"synth-{angle_deg:g}-{seed}"
    return Trial(trial_id=tid, crossing_angle_deg=float(angle_deg),
                 sample_rate_hz=float(fs_hz), samples=tuple(samples),
                 bisector=(1.0, 0.0))


def _formation(n: int, bands: int | None, wavelength: float,
               lateral_spacing: float, crest: bool) -> np.ndarray:
    """Staggered lattice: vertical bands on the group's stripe lines.

    Band x-positions follow the ``psi = 0`` stripe convention: crest lines
    at wavelength * (k + 1/4), trough lines at wavelength * (k + 3/4).
    """
    if n < 1:
        raise errors.ConfigError("group size must be >= 1")
    nb = bands if bands is not None else max(2, int(round(math.sqrt(n))))
    nb = min(nb, n)
    quarter = 0.25 if crest else 0.75
    ks = range(-(nb // 2), nb - nb // 2)
    centers = [wavelength * (k + quarter) for k in ks]
    base, extra = divmod(n, nb)
    pts = []
    for b, cx in enumerate(centers):
        count = base + (1 if b < extra else 0)
        stagger = (b % 2) * lateral_spacing / 2.0
        for j in range(count):
            y = (j - (count - 1) / 2.0) * lateral_spacing + stagger
            pts.append((cx, y))
    return np.array(pts)
