"""Canonical CSV parsing, frame extraction, and geometry operations."""

import math

import numpy as np
import pytest

from stripefit import errors
from stripefit.model import (Frame, TrackSample, Trial, TrialSet,
                             crossing_window, estimate_bisector, frame_at,
                             parse_metadata, parse_trials, rotate_to_bisector,
                             serialize_trials)

HEADER = "trial_id,crossing_angle_deg,pedestrian_id,group,t,x,y"


def make_trial(tracks, angle=90.0, fs=10.0, trial_id="t0", bisector=None):
    """tracks: dict ped -> (group, [(t, x, y), ...])"""
    samples = []
    for ped, (group, pts) in tracks.items():
        samples.extend(TrackSample(ped, group, t, x, y) for t, x, y in pts)
    samples.sort(key=lambda s: (s.pedestrian_id, s.t))
    return Trial(trial_id=trial_id, crossing_angle_deg=angle,
                 sample_rate_hz=fs, samples=tuple(samples),
                 bisector=bisector)


def walk(t0, n, dt, x0, y0, vx=0.0, vy=0.0):
    return [(t0 + k * dt, x0 + vx * k * dt, y0 + vy * k * dt)
            for k in range(n)]


# --------------------------------------------------------------------------
# parsing

def test_parse_empty_input_is_no_trials():
    with pytest.raises(errors.ParseError, match="no trials"):
        parse_trials("")
    with pytest.raises(errors.ParseError, match="no trials"):
        parse_trials(HEADER + "\n")


def test_parse_minimal_two_rows():
    csv = HEADER + "\nA,90,p1,1,0.0,0.0,0.0\nA,90,p2,2,0.0,1.0,1.0\n"
    ts = parse_trials(csv)
    assert len(ts) == 1
    trial = ts["A"]
    assert trial.crossing_angle_deg == 90.0
    fr = frame_at(trial, 0.0)
    assert fr.n1 == 1 and fr.n2 == 1


def test_parse_duplicate_sample_rejected():
    csv = (HEADER + "\nA,90,p1,1,0.0,0.0,0.0\nA,90,p2,2,0.0,1.0,1.0\n"
           "A,90,p1,1,0.0,0.5,0.5\n")
    with pytest.raises(errors.DuplicateSampleError) as exc:
        parse_trials(csv)
    assert exc.value.line == 4


def test_parse_bad_group_label():
    csv = HEADER + "\nA,90,p1,3,0.0,0.0,0.0\n"
    with pytest.raises(errors.SchemaError) as exc:
        parse_trials(csv)
    assert exc.value.line == 2


def test_parse_malformed_row_reports_line():
    csv = HEADER + "\nA,90,p1,1,0.0,0.0,0.0\nA,90,p2,2,zap,1.0,1.0\n"
    with pytest.raises(errors.ParseError) as exc:
        parse_trials(csv)
    assert exc.value.line == 3


def test_parse_wrong_header():
    with pytest.raises(errors.SchemaError):
        parse_trials("a,b,c\n1,2,3\n")


def test_parse_rejects_zero_angle():
    csv = HEADER + "\nA,0,p1,1,0.0,0.0,0.0\nA,0,p2,2,0.0,1.0,1.0\n"
    with pytest.raises(errors.SchemaError):
        parse_trials(csv)


def test_parse_requires_both_groups():
    csv = HEADER + "\nA,90,p1,1,0.0,0.0,0.0\nA,90,p2,1,0.0,1.0,1.0\n"
    with pytest.raises(errors.SchemaError):
        parse_trials(csv)


def test_parse_infers_sample_rate():
    rows = [HEADER]
    for k in range(5):
        rows.append(f"A,90,p1,1,{k * 0.05!r},0.0,0.0")
        rows.append(f"A,90,p2,2,{k * 0.05!r},1.0,1.0")
    ts = parse_trials("\n".join(rows) + "\n")
    assert ts["A"].sample_rate_hz == pytest.approx(20.0)


def test_metadata_overrides_fs_and_bisector():
    csv = HEADER + "\nA,90,p1,1,0.0,0.0,0.0\nA,90,p2,2,0.0,1.0,1.0\n"
    meta = parse_metadata(
        '[{"trial_id": "A", "bisector": [0.0, 1.0], "sample_rate_hz": 60}]')
    ts = parse_trials(csv, metadata=meta)
    assert ts["A"].sample_rate_hz == 60.0
    assert ts["A"].bisector == (0.0, 1.0)


def test_roundtrip_through_csv_is_identity():
    trial = make_trial({
        "p1": (1, walk(0.0, 20, 0.1, -3.0, 0.25, vx=1.31)),
        "p2": (2, walk(0.0, 20, 0.1, 3.0, -0.4, vx=-1.27)),
    }, angle=120.0)
    ts = TrialSet.from_trials([trial])
    text = serialize_trials(ts)
    again = parse_trials(text)
    assert serialize_trials(again) == text
    orig = {(s.pedestrian_id, s.t): (s.x, s.y) for s in trial.samples}
    back = {(s.pedestrian_id, s.t): (s.x, s.y)
            for s in again["A" if "A" in again else trial.trial_id].samples}
    assert orig == back


# --------------------------------------------------------------------------
# frame extraction

def test_frame_at_exact_grid_point():
    trial = make_trial({
        "p1": (1, walk(0.0, 11, 0.1, 0.0, 0.0, vx=1.0)),
        "p2": (2, walk(0.0, 11, 0.1, 5.0, 1.0, vx=-1.0)),
    })
    fr = frame_at(trial, 0.5)
    assert fr.g1[0] == pytest.approx([0.5, 0.0])
    assert fr.g2[0] == pytest.approx([4.5, 1.0])


def test_frame_at_midpoint_ties_to_earlier_sample():
    trial = make_trial({
        "p1": (1, [(0.0, 0.0, 0.0), (0.1, 1.0, 0.0)]),
        "p2": (2, [(0.0, 5.0, 0.0), (0.1, 6.0, 0.0)]),
    })
    fr = frame_at(trial, 0.05)
    assert fr.g1[0][0] == 0.0
    assert fr.g2[0][0] == 5.0


def test_frame_at_outside_recording_is_empty_frame():
    trial = make_trial({
        "p1": (1, walk(0.0, 5, 0.1, 0.0, 0.0)),
        "p2": (2, walk(0.0, 5, 0.1, 1.0, 0.0)),
    })
    with pytest.raises(errors.EmptyFrameError):
        frame_at(trial, 10.0)


def test_frame_at_group_empty():
    trial = make_trial({
        "p1": (1, walk(0.0, 21, 0.1, 0.0, 0.0)),
        "p2": (2, walk(0.0, 5, 0.1, 1.0, 0.0)),
    })
    with pytest.raises(errors.GroupEmptyError):
        frame_at(trial, 2.0)


def test_frame_group_sizes_constant_over_stable_window():
    trial = make_trial({
        "p1": (1, walk(0.0, 21, 0.1, 0.0, 0.0, vx=1.0)),
        "p2": (1, walk(0.0, 21, 0.1, 0.0, 1.0, vx=1.0)),
        "q1": (2, walk(0.0, 21, 0.1, 5.0, 0.0, vx=-1.0)),
    })
    sizes = {(frame_at(trial, t).n1, frame_at(trial, t).n2)
             for t in np.arange(0.2, 1.8, 0.1)}
    assert sizes == {(2, 1)}


# --------------------------------------------------------------------------
# rotation

def test_rotate_identity_with_unit_x():
    fr = Frame(t=0.0, g1=[(1.0, 2.0)], g2=[(3.0, -4.0)])
    out = rotate_to_bisector(fr, (1.0, 0.0))
    assert np.allclose(out.g1, fr.g1, atol=0)
    assert np.allclose(out.g2, fr.g2, atol=0)


def test_rotate_maps_bisector_to_x_axis():
    fr = Frame(t=0.0, g1=[(0.0, 1.0)], g2=[(0.0, 2.0)])
    out = rotate_to_bisector(fr, (0.0, 1.0))
    assert out.g1[0] == pytest.approx([1.0, 0.0], abs=1e-15)


def test_rotate_rejects_bad_directions():
    fr = Frame(t=0.0, g1=[(1.0, 2.0)], g2=[(3.0, 4.0)])
    with pytest.raises(errors.InvalidDirectionError):
        rotate_to_bisector(fr, (0.0, 0.0))
    with pytest.raises(errors.InvalidDirectionError):
        rotate_to_bisector(fr, (1.0, 1.0))


def test_rotate_preserves_pairwise_distances():
    rng = np.random.default_rng(3)
    for _ in range(20):
        g1 = rng.uniform(-10, 10, size=(6, 2))
        g2 = rng.uniform(-10, 10, size=(5, 2))
        theta = rng.uniform(0, 2 * math.pi)
        fr = Frame(t=0.0, g1=g1, g2=g2)
        out = rotate_to_bisector(fr, (math.cos(theta), math.sin(theta)))
        pts_a = np.vstack([fr.g1, fr.g2])
        pts_b = np.vstack([out.g1, out.g2])
        da = np.linalg.norm(pts_a[:, None] - pts_a[None], axis=-1)
        db = np.linalg.norm(pts_b[:, None] - pts_b[None], axis=-1)
        scale = da.max()
        assert np.abs(da - db).max() <= 1e-12 * scale


# --------------------------------------------------------------------------
# bisector estimation

def test_estimate_bisector_symmetric_groups():
    trial = make_trial({
        "p1": (1, walk(0.0, 21, 0.1, 0.0, 0.0, vx=1.0)),
        "p2": (2, walk(0.0, 21, 0.1, 0.0, 5.0, vy=1.0)),
    })
    b = estimate_bisector(trial, window_s=2.0)
    assert b == pytest.approx((1 / math.sqrt(2), 1 / math.sqrt(2)), abs=1e-9)


def test_estimate_bisector_parallel_groups():
    trial = make_trial({
        "p1": (1, walk(0.0, 21, 0.1, 0.0, 0.0, vx=1.3)),
        "p2": (2, walk(0.0, 21, 0.1, 0.0, 5.0, vx=1.1)),
    })
    assert estimate_bisector(trial) == pytest.approx((1.0, 0.0), abs=1e-12)


def test_estimate_bisector_stationary_groups_degenerate():
    trial = make_trial({
        "p1": (1, walk(0.0, 21, 0.1, 0.0, 0.0)),
        "p2": (2, walk(0.0, 21, 0.1, 1.0, 0.0)),
    })
    with pytest.raises(errors.DegenerateMotionError):
        estimate_bisector(trial)


def test_estimate_bisector_antiparallel_degenerate():
    trial = make_trial({
        "p1": (1, walk(0.0, 21, 0.1, 0.0, 0.0, vx=1.0)),
        "p2": (2, walk(0.0, 21, 0.1, 5.0, 0.0, vx=-1.0)),
    })
    with pytest.raises(errors.DegenerateMotionError):
        estimate_bisector(trial)


# --------------------------------------------------------------------------
# crossing window

def _two_wide_groups(g1_x_of_t, n=11, dt=1.0):
    """Group 1: two peds straddling x(t); group 2 static box x in [4.5, 5.5]."""
    tracks = {
        "a1": (1, [(k * dt, g1_x_of_t(k * dt) - 0.5, 0.0) for k in range(n)]),
        "a2": (1, [(k * dt, g1_x_of_t(k * dt) + 0.5, 1.0) for k in range(n)]),
        "b1": (2, [(k * dt, 4.5, 0.0) for k in range(n)]),
        "b2": (2, [(k * dt, 5.5, 1.0) for k in range(n)]),
    }
    return make_trial(tracks, fs=1.0)


def test_crossing_window_single_overlap_interval():
    trial = _two_wide_groups(lambda t: t)  # boxes meet for t in [4, 6]
    assert crossing_window(trial) == (4.0, 6.0)


def test_crossing_window_no_overlap():
    trial = _two_wide_groups(lambda t: -10.0 + 0.1 * t)
    with pytest.raises(errors.NoCrossingError):
        crossing_window(trial)


def test_crossing_window_picks_longest_interval():
    # inside the box at t in {2, 3} and again at t in {6, 7, 8, 9}
    positions = {2: 5.0, 3: 5.0, 6: 5.0, 7: 5.0, 8: 5.0, 9: 5.0}
    trial = _two_wide_groups(lambda t: positions.get(int(t), -20.0))
    assert crossing_window(trial) == (6.0, 9.0)


def test_trialset_rejects_duplicate_ids():
    trial = make_trial({"p1": (1, [(0.0, 0.0, 0.0)]),
                        "p2": (2, [(0.0, 1.0, 0.0)])})
    ts = TrialSet.from_trials([trial])
    with pytest.raises(errors.DuplicateSampleError):
        ts.add(trial)
