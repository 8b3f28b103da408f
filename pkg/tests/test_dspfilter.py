"""Zero-phase Butterworth filtering against an extended-precision oracle.

The coefficient oracle re-derives the digital filter symbolically with
mpmath (60 significant digits): analog Butterworth poles, frequency
prewarping, bilinear transform, unity DC gain. It shares no code with the
implementation under test.
"""

import math

import numpy as np
import pytest
from mpmath import mp, mpc, mpf

from stripefit import errors
from stripefit.dspfilter import IIRCoeffs, butter_lowpass, filter_trial, filtfilt
from stripefit.model import TrackSample, Trial


def butter_oracle(order, cutoff_hz, fs_hz):
    """High-precision bilinear-transform Butterworth design."""
    mp.dps = 60
    n = order
    fc = mpf(cutoff_hz)
    fs = mpf(fs_hz)
    poles = [mp.e ** (mpc(0, 1) * mp.pi * (2 * k + n + 1) / (2 * n))
             for k in range(n)]
    warped = 2 * fs * mp.tan(mp.pi * fc / fs)
    zpoles = [(1 + p * warped / (2 * fs)) / (1 - p * warped / (2 * fs))
              for p in poles]
    a = [mpf(1)]
    for zp in zpoles:  # multiply (z - zp) in
        a = [a[i] - (zp * a[i - 1] if i else 0)
             for i in range(len(a))] + [-zp * a[-1]]
    a = [x.real if hasattr(x, "real") else x for x in a]
    binom = [mp.binomial(n, k) for k in range(n + 1)]
    gain = sum(a) / 2 ** n
    b = [gain * c for c in binom]
    return [float(x) for x in b], [float(x) for x in a]


@pytest.mark.parametrize("order,cutoff,fs", [
    (4, 0.5, 120.0),
    (2, 0.5, 120.0),
    (4, 2.0, 60.0),
])
def test_coefficients_match_extended_precision_oracle(order, cutoff, fs):
    coeffs = butter_lowpass(order, cutoff, fs)
    b_ref, a_ref = butter_oracle(order, cutoff, fs)
    assert np.abs(coeffs.b - np.array(b_ref)).max() <= 1e-10
    assert np.abs(coeffs.a - np.array(a_ref)).max() <= 1e-10


def test_unity_dc_gain():
    coeffs = butter_lowpass(4, 0.5, 120.0)
    assert coeffs.b.sum() / coeffs.a.sum() == pytest.approx(1.0, abs=1e-12)


def test_half_power_at_cutoff():
    coeffs = butter_lowpass(4, 0.5, 120.0)
    assert coeffs.magnitude(0.5, 120.0) == pytest.approx(
        1.0 / math.sqrt(2.0), abs=1e-9)


def test_invalid_cutoff_rejected():
    with pytest.raises(errors.InvalidCutoffError):
        butter_lowpass(4, 60.0, 120.0)
    with pytest.raises(errors.InvalidCutoffError):
        butter_lowpass(4, 0.0, 120.0)
    with pytest.raises(errors.ConfigError):
        butter_lowpass(3, 0.5, 120.0)


def test_unstable_coefficients_rejected():
    with pytest.raises(errors.ConfigError):
        IIRCoeffs(b=np.array([1.0, 0.0]), a=np.array([1.0, -1.5]))


# --------------------------------------------------------------------------
# filtfilt behaviour (fs = 120 Hz, cutoff 0.5 Hz unless noted)

FS = 120.0


@pytest.fixture(scope="module")
def coeffs():
    return butter_lowpass(4, 0.5, FS)


def _sine(freq, seconds=60.0, fs=FS):
    t = np.arange(int(round(seconds * fs))) / fs
    return np.sin(2 * math.pi * freq * t)


def test_constant_series_preserved(coeffs):
    x = np.full(2000, 3.7)
    y = filtfilt(coeffs, x)
    assert y.shape == x.shape
    assert np.abs(y - 3.7).max() <= 1e-9


def test_passband_sine_amplitude_and_zero_phase(coeffs):
    x = _sine(0.1)
    y = filtfilt(coeffs, x)
    assert y.max() >= 0.999
    corr = np.correlate(y, x, mode="full")
    assert int(np.argmax(corr)) == len(x) - 1  # peak at lag 0


def test_stopband_sine_attenuated(coeffs):
    # 5 Hz = 10x cutoff; analytic |H|^2 there is ~9.5e-9
    x = _sine(5.0)
    y = filtfilt(coeffs, x)
    assert np.abs(y).max() <= 1e-6


def test_linearity(coeffs):
    rng = np.random.default_rng(0)
    u = rng.normal(size=4000)
    v = rng.normal(size=4000)
    lhs = filtfilt(coeffs, 1.3 * u - 0.7 * v)
    rhs = 1.3 * filtfilt(coeffs, u) - 0.7 * filtfilt(coeffs, v)
    assert np.abs(lhs - rhs).max() <= 1e-9


def test_time_reversal_symmetry(coeffs):
    rng = np.random.default_rng(1)
    x = rng.normal(size=3000)
    assert np.abs(filtfilt(coeffs, x[::-1]) - filtfilt(coeffs, x)[::-1]
                  ).max() <= 1e-9


def test_idempotent_on_band_limited_signal(coeffs):
    x = _sine(0.1)
    once = filtfilt(coeffs, x)
    twice = filtfilt(coeffs, once)
    mid = slice(len(x) // 4, 3 * len(x) // 4)
    rel = np.abs(twice[mid] - once[mid]).max() / np.abs(once[mid]).max()
    assert rel < 0.002


def test_short_series_rejected(coeffs):
    with pytest.raises(errors.ShortSeriesError):
        filtfilt(coeffs, np.zeros(44))
    filtfilt(coeffs, np.zeros(45))  # 3x padlen exactly: accepted


def test_filter_trial_smooths_gait_oscillation():
    fs = 120.0
    t = np.arange(int(6 * fs)) / fs
    # straight walk plus 2 Hz lateral sway, well above the 0.5 Hz cutoff
    sway = 0.05 * np.sin(2 * math.pi * 2.0 * t)
    samples = []
    for ped, group, y0 in (("p1", 1, 0.0), ("p2", 2, 1.0)):
        for k, tk in enumerate(t):
            samples.append(TrackSample(ped, group, tk, 1.3 * tk,
                                       y0 + sway[k]))
    trial = Trial(trial_id="w", crossing_angle_deg=90.0, sample_rate_hz=fs,
                  samples=tuple(sorted(samples,
                                       key=lambda s: (s.pedestrian_id, s.t))))
    out = filter_trial(trial, cutoff_hz=0.5, order=4)
    ys = np.array([s.y for s in out.samples if s.pedestrian_id == "p1"])
    mid = slice(len(ys) // 4, 3 * len(ys) // 4)
    assert np.abs(ys[mid] - 0.0).max() < 0.002  # sway removed
    xs = np.array([s.x for s in out.samples if s.pedestrian_id == "p1"])
    ts = np.array([s.t for s in out.samples if s.pedestrian_id == "p1"])
    assert np.abs(xs[mid] - 1.3 * ts[mid]).max() < 0.01  # trend kept
