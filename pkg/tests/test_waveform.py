"""Waveform evaluation, the group-contrast objective, and canonical form."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stripefit import errors
from stripefit.model import Frame
from stripefit.waveform import (WaveKind, WaveParams, canonicalize, eval_wave,
                                objective, rotated_coord)

TWO_PI = 2.0 * math.pi


def frame_of(g1, g2, t=0.0):
    return Frame(t=t, g1=np.array(g1, dtype=float),
                 g2=np.array(g2, dtype=float))


# --------------------------------------------------------------------------
# rotated coordinate

def test_rotated_coord_gamma_90_picks_x():
    assert rotated_coord((1.0, 0.0), 90.0) == pytest.approx(1.0, abs=1e-15)


def test_rotated_coord_gamma_0_picks_minus_y():
    assert rotated_coord((0.0, 1.0), 0.0) == pytest.approx(-1.0, abs=1e-15)


def test_rotated_coord_hand_value():
    # x sin(30) - y cos(30) = 3*0.5 - 4*sqrt(3)/2
    expected = 1.5 - 2.0 * math.sqrt(3.0)
    assert rotated_coord((3.0, 4.0), 30.0) == pytest.approx(expected,
                                                            abs=1e-12)


# --------------------------------------------------------------------------
# wave evaluation

def test_sine_zero_at_origin():
    p = WaveParams(90.0, 4.0, 0.0)
    assert eval_wave(WaveKind.SINE, (0.0, 0.0), p) == 0.0


def test_sine_quarter_and_full_period():
    p = WaveParams(90.0, 4.0, 0.0)
    assert eval_wave(WaveKind.SINE, (1.0, 0.0), p) == pytest.approx(1.0)
    assert eval_wave(WaveKind.SINE, (5.0, 0.0), p) == pytest.approx(1.0)


def test_square_sign_of_known_sine():
    p = WaveParams(90.0, 4.0, 0.0)
    assert eval_wave(WaveKind.SQUARE, (3.0, 0.0), p) == -1.0


def test_square_zero_at_node():
    p = WaveParams(90.0, 4.0, 0.0)
    assert eval_wave(WaveKind.SQUARE, (0.0, 0.0), p) == 0.0


# --------------------------------------------------------------------------
# objective

def test_objective_perfect_fit_is_two():
    p = WaveParams(90.0, 4.0, 0.0)
    fr = frame_of([(1.0, 0.0)], [(3.0, 0.0)])  # crest vs trough
    assert objective(WaveKind.SINE, fr, p) == pytest.approx(2.0)
    assert objective(WaveKind.SQUARE, fr, p) == 2.0


def test_objective_coincident_groups_cancel():
    p = WaveParams(37.0, 1.3, 0.4)
    fr = frame_of([(0.0, 0.0)], [(0.0, 0.0)])
    assert objective(WaveKind.SINE, fr, p) == 0.0
    assert objective(WaveKind.SQUARE, fr, p) == 0.0


def test_objective_hand_computed_value():
    # gamma=90, lambda=4, psi=0: f(1,0)=1, f(0,0)=0, f(3,0)=-1
    # C = (1+0)/2 + (1)/1 = 1.5
    p = WaveParams(90.0, 4.0, 0.0)
    fr = frame_of([(1.0, 0.0), (0.0, 0.0)], [(3.0, 0.0)])
    assert objective(WaveKind.SINE, fr, p) == pytest.approx(1.5, abs=1e-12)


def test_objective_empty_group_raises():
    p = WaveParams(90.0, 4.0, 0.0)
    fr = frame_of(np.empty((0, 2)), [(1.0, 2.0)])
    with pytest.raises(errors.GroupEmptyError):
        objective(WaveKind.SINE, fr, p)


# --------------------------------------------------------------------------
# canonicalize

def test_canonicalize_identity_when_canonical():
    p = WaveParams(90.0, 2.0, 0.0)
    assert canonicalize(p) == p


def test_canonicalize_phase_mod_two_pi():
    p = canonicalize(WaveParams(45.0, 2.0, TWO_PI + 0.1))
    assert p.gamma_deg == pytest.approx(45.0)
    assert p.psi_rad == pytest.approx(0.1, abs=1e-12)


def test_canonicalize_rejects_bad_wavelength():
    with pytest.raises(errors.InvalidWavelengthError):
        WaveParams(10.0, -1.0, 0.0)
    with pytest.raises(errors.InvalidWavelengthError):
        WaveParams(10.0, 0.0, 0.0)


@pytest.mark.parametrize("gamma,psi", [
    (270.0, 0.3), (180.0, 0.0), (359.0, 5.9), (-90.0, 2.0),
    (540.5, 1.0), (-361.0, 0.7),
])
def test_canonicalize_preserves_wave_pointwise(gamma, psi):
    raw = WaveParams(gamma, 2.0, psi)
    canon = canonicalize(raw)
    assert 0.0 <= canon.gamma_deg < 180.0
    assert 0.0 <= canon.psi_rad < TWO_PI
    rng = np.random.default_rng(42)
    for _ in range(100):
        pos = tuple(rng.uniform(-10, 10, size=2))
        assert eval_wave(WaveKind.SINE, pos, canon) == pytest.approx(
            eval_wave(WaveKind.SINE, pos, raw), abs=1e-12)


# --------------------------------------------------------------------------
# invariants & properties

finite_pos = st.tuples(st.floats(-20, 20), st.floats(-20, 20))
params_st = st.builds(WaveParams,
                      gamma_deg=st.floats(0, 179.99),
                      lambda_m=st.floats(0.2, 10),
                      psi_rad=st.floats(0, TWO_PI - 1e-9))


@given(pos=finite_pos, params=params_st,
       kind=st.sampled_from(list(WaveKind)))
@settings(deadline=None)
def test_wave_bounded(pos, params, kind):
    assert abs(eval_wave(kind, pos, params)) <= 1.0


def _random_frame(seed, n1=6, n2=5):
    rng = np.random.default_rng(seed)
    return frame_of(rng.uniform(-8, 8, size=(n1, 2)),
                    rng.uniform(-8, 8, size=(n2, 2)))


@given(seed=st.integers(0, 2 ** 16), params=params_st,
       kind=st.sampled_from(list(WaveKind)))
@settings(deadline=None, max_examples=60)
def test_objective_bounded(seed, params, kind):
    fr = _random_frame(seed)
    assert -2.0 <= objective(kind, fr, params) <= 2.0


@given(seed=st.integers(0, 2 ** 16), params=params_st,
       shift=st.floats(-7, 7))
@settings(deadline=None, max_examples=60)
def test_translation_along_stripe_is_invariant(seed, params, shift):
    fr = _random_frame(seed)
    g = math.radians(params.gamma_deg)
    d = np.array([math.cos(g), math.sin(g)]) * shift
    moved = frame_of(fr.g1 + d, fr.g2 + d)
    for kind in WaveKind:
        assert objective(kind, moved, params) == pytest.approx(
            objective(kind, fr, params), abs=1e-12)


@given(seed=st.integers(0, 2 ** 16), params=params_st)
@settings(deadline=None, max_examples=60)
def test_shift_by_wavelength_is_invariant(seed, params):
    fr = _random_frame(seed)
    g = math.radians(params.gamma_deg)
    d = np.array([math.sin(g), -math.cos(g)]) * params.lambda_m
    moved = frame_of(fr.g1 + d, fr.g2 + d)
    assert objective(WaveKind.SINE, moved, params) == pytest.approx(
        objective(WaveKind.SINE, fr, params), abs=1e-12)


@given(seed=st.integers(0, 2 ** 16), params=params_st,
       kind=st.sampled_from(list(WaveKind)))
@settings(deadline=None, max_examples=60)
def test_group_swap_antisymmetry(seed, params, kind):
    fr = _random_frame(seed, n1=5, n2=5)
    swapped = frame_of(fr.g2, fr.g1)
    assert objective(kind, swapped, params) == -objective(kind, fr, params)


@given(seed=st.integers(0, 2 ** 16), params=params_st)
@settings(deadline=None, max_examples=60)
def test_degeneracy_identity(seed, params):
    fr = _random_frame(seed)
    flipped = WaveParams(params.gamma_deg + 180.0, params.lambda_m,
                         (TWO_PI - params.psi_rad) % TWO_PI)
    for kind in WaveKind:
        assert objective(kind, fr, flipped) == pytest.approx(
            -objective(kind, fr, params), abs=1e-12)


@given(seed=st.integers(0, 2 ** 16), params=params_st,
       scale=st.floats(0.1, 10))
@settings(deadline=None, max_examples=60)
def test_scale_covariance(seed, params, scale):
    fr = _random_frame(seed)
    scaled_frame = frame_of(fr.g1 * scale, fr.g2 * scale)
    scaled_params = WaveParams(params.gamma_deg, params.lambda_m * scale,
                               params.psi_rad)
    for kind in WaveKind:
        assert objective(kind, scaled_frame, scaled_params) == pytest.approx(
            objective(kind, fr, params), abs=1e-12)


def test_square_saturates_on_separable_configuration():
    from stripefit.synth import StripeSpec, generate_striped_frame
    frame, truth = generate_striped_frame(
        StripeSpec(gamma_deg=70.0, lambda_m=2.0, psi_rad=0.9, n1=12, n2=12,
                   extent_m=6.0, seed=1))
    assert objective(WaveKind.SQUARE, frame, truth) == 2.0
    assert objective(WaveKind.SINE, frame, truth) <= 2.0
