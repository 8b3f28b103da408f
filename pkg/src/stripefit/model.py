"""Trajectory data model: group-labelled 2D tracks, frames, and geometry.

Canonical CSV schema (header required)::

    trial_id,crossing_angle_deg,pedestrian_id,group,t,x,y

with ``group`` in {1, 2}, ``t`` in seconds and ``x``/``y`` in metres.
An optional metadata JSON supplies per-trial ``bisector`` and
``sample_rate_hz``; without it the sample rate is inferred from the time
grid (falling back to ``default_fs``) and the bisector is estimated from
early motion.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import errors
from ._kernels import prepare

CSV_HEADER = ("trial_id", "crossing_angle_deg", "pedestrian_id",
              "group", "t", "x", "y")

#: relative tolerance on per-pedestrian sample spacing vs 1/sample_rate_hz
_SPACING_RTOL = 1e-6


@dataclass(frozen=True)
class TrackSample:
    """One tracked position of one pedestrian."""

    pedestrian_id: str
    group: int
    t: float
    x: float
    y: float


@dataclass(frozen=True)
class Frame:
    """Positions of both groups at one instant; arrays are read-only."""

    t: float
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        for name in ("g1", "g2"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1, 2)
            if arr.size and not np.isfinite(arr).all():
                raise errors.ParseError(f"non-finite positions in {name}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n1(self) -> int:
        return self.g1.shape[0]

    @property
    def n2(self) -> int:
        return self.g2.shape[0]

    # columns in the evaluation backend's preferred container, cached for
    # the many-evaluation optimizer loops
    @cached_property
    def g1x(self):
        return prepare(self.g1[:, 0])

    @cached_property
    def g1y(self):
        return prepare(self.g1[:, 1])

    @cached_property
    def g2x(self):
        return prepare(self.g2[:, 0])

    @cached_property
    def g2y(self):
        return prepare(self.g2[:, 1])

    def diameter(self) -> float:
        """Diagonal of the bounding box over all points of both groups."""
        pts = np.vstack([self.g1, self.g2])
        if pts.shape[0] == 0:
            return 0.0
        span = pts.max(axis=0) - pts.min(axis=0)
        return float(math.hypot(span[0], span[1]))


@dataclass(frozen=True)
class _Track:
    group: int
    t0: float
    pos: np.ndarray  # (n, 2)

    @property
    def n(self) -> int:
        return self.pos.shape[0]


@dataclass(frozen=True)
class Trial:
    """One crossing-flow recording."""

    trial_id: str
    crossing_angle_deg: float
    sample_rate_hz: float
    samples: tuple[TrackSample, ...]
    bisector: tuple[float, float] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.crossing_angle_deg)
                and 0.0 < self.crossing_angle_deg <= 180.0):
            raise errors.SchemaError(
                f"trial {self.trial_id!r}: crossing angle must be in (0, 180], "
                f"got {self.crossing_angle_deg!r}")
        if not (math.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise errors.SchemaError(
                f"trial {self.trial_id!r}: invalid sample rate "
                f"{self.sample_rate_hz!r}")
        object.__setattr__(self, "samples", tuple(self.samples))
        groups = {s.group for s in self.samples}
        if not {1, 2} <= groups:
            raise errors.SchemaError(
                f"trial {self.trial_id!r}: needs at least one pedestrian in "
                f"each group")
        self._validate_tracks()

    def _validate_tracks(self):
        dt = 1.0 / self.sample_rate_hz
        by_ped: dict[str, list[TrackSample]] = {}
        for s in self.samples:
            if not all(map(math.isfinite, (s.t, s.x, s.y))):
                raise errors.SchemaError(
                    f"trial {self.trial_id!r}: non-finite sample for "
                    f"pedestrian {s.pedestrian_id!r}")
            by_ped.setdefault(s.pedestrian_id, []).append(s)
        for ped, ss in by_ped.items():
            if len({s.group for s in ss}) != 1:
                raise errors.SchemaError(
                    f"trial {self.trial_id!r}: pedestrian {ped!r} appears in "
                    f"both groups")
            for a, b in zip(ss, ss[1:]):
                if b.t <= a.t:
                    raise errors.SchemaError(
                        f"trial {self.trial_id!r}: pedestrian {ped!r} times "
                        f"not strictly increasing")
                if abs((b.t - a.t) - dt) > _SPACING_RTOL * dt:
                    raise errors.SchemaError(
                        f"trial {self.trial_id!r}: pedestrian {ped!r} spacing "
                        f"{b.t - a.t!r} != 1/sample_rate_hz")

    @cached_property
    def _tracks(self) -> dict[str, _Track]:
        grouped: dict[str, list[TrackSample]] = {}
        for s in self.samples:
            grouped.setdefault(s.pedestrian_id, []).append(s)
        tracks = {}
        for ped in sorted(grouped):
            ss = grouped[ped]
            tracks[ped] = _Track(
                group=ss[0].group,
                t0=ss[0].t,
                pos=np.array([(s.x, s.y) for s in ss], dtype=float),
            )
        return tracks

    @property
    def t_min(self) -> float:
        return min(s.t for s in self.samples)

    @property
    def t_max(self) -> float:
        return max(s.t for s in self.samples)

    def frame_times(self) -> np.ndarray:
        """Grid of frame times spanning the recording at the sample rate."""
        fs = self.sample_rate_hz
        n = int(round((self.t_max - self.t_min) * fs)) + 1
        return self.t_min + np.arange(n) / fs

    def group_ids(self, group: int) -> list[str]:
        return [p for p, tr in self._tracks.items() if tr.group == group]


@dataclass
class TrialSet:
    """Ordered collection of trials keyed by trial_id."""

    trials: dict[str, Trial] = field(default_factory=dict)

    @classmethod
    def from_trials(cls, trials) -> "TrialSet":
        ts = cls()
        for t in trials:
            ts.add(t)
        return ts

    def add(self, trial: Trial):
        if trial.trial_id in self.trials:
            raise errors.DuplicateSampleError(
                f"duplicate trial_id {trial.trial_id!r}")
        self.trials[trial.trial_id] = trial

    def __iter__(self):
        return iter(self.trials.values())

    def __len__(self) -> int:
        return len(self.trials)

    def __getitem__(self, trial_id: str) -> Trial:
        return self.trials[trial_id]

    def __contains__(self, trial_id: str) -> bool:
        return trial_id in self.trials

    def ids(self) -> list[str]:
        return list(self.trials)


# --------------------------------------------------------------------------
# parsing / serialization

def _read_text(source) -> str:
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise errors.ParseError(f"input is not UTF-8: {exc}") from None
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return _read_text(data)
    return data


def parse_metadata(source) -> dict[str, dict]:
    """Parse the optional per-trial metadata JSON.

    Accepts one object or a list of objects, each shaped
    ``{trial_id, bisector: [bx, by], sample_rate_hz}``.
    """
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"metadata JSON: {exc}") from None
    if isinstance(doc, dict):
        doc = [doc]
    meta = {}
    for entry in doc:
        if not isinstance(entry, dict) or "trial_id" not in entry:
            raise errors.SchemaError("metadata entries need a trial_id")
        meta[str(entry["trial_id"])] = entry
    return meta


def parse_trials(source, fmt: str = "canonical_csv", metadata=None,
                 default_fs: float = 120.0) -> TrialSet:
    """Parse canonical CSV into a validated TrialSet."""
    if fmt != "canonical_csv":
        raise errors.ConfigError(f"unknown input format {fmt!r}")
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise errors.ParseError("no trials in input") from None
    if [h.strip() for h in header] != list(CSV_HEADER):
        raise errors.SchemaError(
            f"expected header {','.join(CSV_HEADER)}", line=1)

    order: list[str] = []
    rows: dict[str, list[TrackSample]] = {}
    angles: dict[str, float] = {}
    seen: set[tuple[str, str, float]] = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise errors.ParseError(
                f"expected {len(CSV_HEADER)} fields, got {len(row)}",
                line=line_no)
        trial_id, angle_s, ped, group_s, t_s, x_s, y_s = \
            (f.strip() for f in row)
        if group_s not in ("1", "2"):
            raise errors.SchemaError(
                f"group must be 1 or 2, got {group_s!r}", line=line_no)
        try:
            angle = float(angle_s)
            t = float(t_s)
            x = float(x_s)
            y = float(y_s)
        except ValueError as exc:
            raise errors.ParseError(str(exc), line=line_no) from None
        if not all(map(math.isfinite, (angle, t, x, y))):
            raise errors.ParseError("non-finite value", line=line_no)
        if trial_id in angles and angles[trial_id] != angle:
            raise errors.ParseError(
                f"trial {trial_id!r} has inconsistent crossing angles",
                line=line_no)
        key = (trial_id, ped, t)
        if key in seen:
            raise errors.DuplicateSampleError(
                f"duplicate sample (trial={trial_id!r}, pedestrian={ped!r}, "
                f"t={t!r})", line=line_no)
        seen.add(key)
        if trial_id not in rows:
            order.append(trial_id)
            rows[trial_id] = []
            angles[trial_id] = angle
        rows[trial_id].append(TrackSample(ped, int(group_s), t, x, y))

    if not order:
        raise errors.ParseError("no trials in input")

    meta = metadata or {}
    trial_set = TrialSet()
    for trial_id in order:
        samples = sorted(rows[trial_id], key=lambda s: (s.pedestrian_id, s.t))
        entry = meta.get(trial_id, {})
        fs = entry.get("sample_rate_hz") or _infer_fs(samples, default_fs)
        bis = entry.get("bisector")
        trial_set.add(Trial(
            trial_id=trial_id,
            crossing_angle_deg=angles[trial_id],
            sample_rate_hz=float(fs),
            samples=tuple(samples),
            bisector=tuple(map(float, bis)) if bis is not None else None,
        ))
    return trial_set


def _infer_fs(samples, default_fs: float) -> float:
    dts = []
    by_ped: dict[str, float] = {}
    for s in samples:
        if s.pedestrian_id in by_ped:
            dts.append(s.t - by_ped[s.pedestrian_id])
        by_ped[s.pedestrian_id] = s.t
    dts = [d for d in dts if d > 0]
    if not dts:
        return default_fs
    return 1.0 / statistics.median(dts)


def serialize_trials(trial_set: TrialSet) -> str:
    """Canonical CSV text; floats use repr for exact round-trips."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for trial in trial_set:
        for s in sorted(trial.samples, key=lambda s: (s.pedestrian_id, s.t)):
            writer.writerow([
                trial.trial_id, repr(trial.crossing_angle_deg),
                s.pedestrian_id, s.group, repr(s.t), repr(s.x), repr(s.y),
            ])
    return out.getvalue()


def load_trials(path, metadata_path=None, default_fs: float = 120.0) -> TrialSet:
    meta = None
    if metadata_path is not None:
        with open(metadata_path, "r", encoding="utf-8") as fh:
            meta = parse_metadata(fh)
    with open(path, "rb") as fh:
        return parse_trials(fh, metadata=meta, default_fs=default_fs)


# --------------------------------------------------------------------------
# frame extraction and geometry

def _positions_at(trial: Trial, t: float):
    """Per-group position lists at the sample nearest to t.

    Ties between two equally near samples resolve to the earlier one;
    pedestrians with no sample within one sample period are omitted.
    """
    fs = trial.sample_rate_hz
    tol = (1.0 + 1e-9) / fs
    g1, g2 = [], []
    for ped, track in trial._tracks.items():
        # ceil(k - 0.5) rounds half-integers down: the earlier sample
        idx = math.ceil((t - track.t0) * fs - 0.5)
        if idx < 0 or idx >= track.n:
            idx = min(max(idx, 0), track.n - 1)
        if abs(t - (track.t0 + idx / fs)) > tol:
            continue
        (g1 if track.group == 1 else g2).append(track.pos[idx])
    return g1, g2


def frame_at(trial: Trial, t: float) -> Frame:
    """Frame of all pedestrians with a sample within 1/fs of time t."""
    g1, g2 = _positions_at(trial, t)
    if not g1 and not g2:
        raise errors.EmptyFrameError(
            f"trial {trial.trial_id!r}: no samples near t={t!r}")
    if not g1 or not g2:
        missing = 1 if not g1 else 2
        raise errors.GroupEmptyError(
            f"trial {trial.trial_id!r}: group {missing} empty at t={t!r}")
    return Frame(t=t, g1=np.array(g1), g2=np.array(g2))


def rotate_to_bisector(frame: Frame, bisector_dir) -> Frame:
    """Rotate all positions so the bisector direction maps to (1, 0)."""
    bx, by = float(bisector_dir[0]), float(bisector_dir[1])
    norm = math.hypot(bx, by)
    if norm < 1e-12:
        raise errors.InvalidDirectionError("bisector direction has zero norm")
    if abs(norm - 1.0) > 1e-9:
        raise errors.InvalidDirectionError(
            f"bisector direction must be unit length, |b|={norm!r}")
    rot = np.array([[bx, by], [-by, bx]])
    return Frame(t=frame.t, g1=frame.g1 @ rot.T, g2=frame.g2 @ rot.T)


def estimate_bisector(trial: Trial, window_s: float = 2.0) -> tuple[float, float]:
    """Unit mean of the two groups' mean travel direction unit vectors.

    Uses displacement over the first ``window_s`` seconds of each track.
    """
    t_lo = trial.t_min
    t_hi = t_lo + window_s
    units = []
    for group in (1, 2):
        disps = []
        vels = []
        for ped in trial.group_ids(group):
            track = trial._tracks[ped]
            ts = track.t0 + np.arange(track.n) / trial.sample_rate_hz
            in_win = np.nonzero((ts >= t_lo) & (ts <= t_hi + 1e-12))[0]
            if in_win.size < 2:
                continue
            a, b = in_win[0], in_win[-1]
            disp = track.pos[b] - track.pos[a]
            disps.append(disp)
            vels.append(disp / (ts[b] - ts[a]))
        if not vels:
            raise errors.DegenerateMotionError(
                f"trial {trial.trial_id!r}: group {group} has no track with "
                f"two samples inside the estimation window")
        mean_disp = np.mean(disps, axis=0)
        if math.hypot(*mean_disp) < 1e-6:
            raise errors.DegenerateMotionError(
                f"trial {trial.trial_id!r}: group {group} mean displacement "
                f"below 1e-6 m")
        mean_vel = np.mean(vels, axis=0)
        units.append(mean_vel / math.hypot(*mean_vel))
    s = units[0] + units[1]
    norm = math.hypot(*s)
    if norm < 1e-6:
        raise errors.DegenerateMotionError(
            f"trial {trial.trial_id!r}: groups move antiparallel; supply the "
            f"bisector explicitly")
    return (float(s[0] / norm), float(s[1] / norm))


def crossing_window(trial: Trial) -> tuple[float, float]:
    """Longest contiguous interval where the groups' bounding boxes overlap."""
    times = trial.frame_times()
    overlap = np.zeros(len(times), dtype=bool)
    for i, t in enumerate(times):
        g1, g2 = _positions_at(trial, float(t))
        if not g1 or not g2:
            continue
        a = np.array(g1)
        b = np.array(g2)
        lo1, hi1 = a.min(axis=0), a.max(axis=0)
        lo2, hi2 = b.min(axis=0), b.max(axis=0)
        overlap[i] = bool((lo1 <= hi2).all() and (lo2 <= hi1).all())
    if not overlap.any():
        raise errors.NoCrossingError(
            f"trial {trial.trial_id!r}: group bounding boxes never overlap")
    best_len = 0
    best_start = 0
    run_start = None
    for i, flag in enumerate(np.append(overlap, False)):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            if i - run_start > best_len:
                best_len = i - run_start
                best_start = run_start
            run_start = None
    return (float(times[best_start]), float(times[best_start + best_len - 1]))
