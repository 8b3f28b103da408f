"""Strategy orchestration: fitting waveforms to frames, trials and batches.

A strategy is one waveform (sine or square) paired with one optimizer
(Nelder-Mead multistart or simulated annealing); the four combinations are
compared throughout. Results carry the normalised score ``c_norm =
objective / 2`` and a fingerprint of the full configuration so every run
is attributable and reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import errors, optim
from . import _kernels
from .model import Frame, Trial, TrialSet, crossing_window, estimate_bisector, \
    frame_at, rotate_to_bisector
from .rng import derive_seed
from .waveform import WaveKind, WaveParams, canonicalize, objective

_DEG2RAD = math.pi / 180.0

#: the deterministic Nelder-Mead start grid: orientation x wavelength x phase
DEFAULT_NM_STARTS = tuple(
    (g, l, p)
    for g in (30.0, 90.0, 150.0)
    for l in (1.0, 2.0, 4.0)
    for p in (0.0, math.pi)
)

RESULT_COLUMNS = ("trial_id", "angle", "strategy", "gamma_deg", "lambda_m",
                  "psi_rad", "c_norm", "evaluations", "wall_time_s",
                  "frame_t", "config_fingerprint")


@dataclass(frozen=True)
class Strategy:
    """One waveform paired with one optimizer ("nm" or "sa")."""

    wave: WaveKind
    optimizer: str

    def __post_init__(self):
        if self.optimizer not in ("nm", "sa"):
            raise errors.ConfigError(
                f"optimizer must be 'nm' or 'sa', got {self.optimizer!r}")

    def __str__(self) -> str:
        return f"{self.wave.value}+{self.optimizer}"

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        try:
            wave_s, opt_s = text.strip().lower().split("+")
        except ValueError:
            raise errors.ConfigError(
                f"strategy must look like 'square+sa', got {text!r}") from None
        return cls(WaveKind.parse(wave_s), opt_s)


ALL_STRATEGIES = tuple(Strategy(w, o)
                       for w in (WaveKind.SINE, WaveKind.SQUARE)
                       for o in ("nm", "sa"))

FRAME_POLICIES = ("single", "best_over_window", "per_frame_series")


@dataclass(frozen=True)
class FitConfig:
    """Every tunable of the fitting pipeline, with auditable defaults."""

    bounds: optim.Bounds = optim.Bounds()
    sa: optim.SASchedule = optim.SASchedule()
    nm_tol: float = 1e-8
    nm_max_iter: int = 500
    nm_initial_step: tuple[float, float, float] = (10.0, 0.4, 0.5)
    nm_starts: tuple[tuple[float, float, float], ...] = DEFAULT_NM_STARTS
    grid_resolution: tuple[int, int, int] = (181, 96, 64)
    frame_policy: str = "best_over_window"
    frame_t: float | None = None
    frame_stride_s: float = 0.25
    bisector_window_s: float = 2.0
    seed: int = 0
    seed_from_trial_id: bool = False

    def __post_init__(self):
        if self.frame_policy not in FRAME_POLICIES:
            raise errors.ConfigError(
                f"frame_policy must be one of {FRAME_POLICIES}, got "
                f"{self.frame_policy!r}")
        if self.frame_stride_s <= 0:
            raise errors.ConfigError("frame_stride_s must be positive")

    def to_dict(self) -> dict:
        return {
            "bounds": {"gamma_deg": list(self.bounds.gamma_deg),
                       "lambda_m": list(self.bounds.lambda_m),
                       "psi_rad": list(self.bounds.psi_rad)},
            "sa": {"t0": self.sa.t0, "alpha": self.sa.alpha,
                   "steps_per_temp": self.sa.steps_per_temp,
                   "t_min": self.sa.t_min,
                   "step_scale": list(self.sa.step_scale),
                   "seed": self.sa.seed},
            "nm": {"tol": self.nm_tol, "max_iter": self.nm_max_iter,
                   "initial_step": list(self.nm_initial_step),
                   "starts": [list(s) for s in self.nm_starts]},
            "grid_resolution": list(self.grid_resolution),
            "frame_policy": self.frame_policy,
            "frame_t": self.frame_t,
            "frame_stride_s": self.frame_stride_s,
            "bisector_window_s": self.bisector_window_s,
            "seed": self.seed,
            "seed_from_trial_id": self.seed_from_trial_id,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FitConfig":
        kwargs = {}
        if "bounds" in doc:
            b = doc["bounds"]
            kwargs["bounds"] = optim.Bounds(
                gamma_deg=tuple(b.get("gamma_deg", (0.0, 180.0))),
                lambda_m=tuple(b.get("lambda_m", (0.7, 10.0))),
                psi_rad=tuple(b.get("psi_rad", (0.0, 2.0 * math.pi))))
        if "sa" in doc:
            s = doc["sa"]
            defaults = optim.SASchedule()
            kwargs["sa"] = optim.SASchedule(
                t0=s.get("t0", defaults.t0),
                alpha=s.get("alpha", defaults.alpha),
                steps_per_temp=s.get("steps_per_temp", defaults.steps_per_temp),
                t_min=s.get("t_min", defaults.t_min),
                step_scale=tuple(s.get("step_scale", defaults.step_scale)),
                seed=s.get("seed", defaults.seed))
        if "nm" in doc:
            n = doc["nm"]
            if "tol" in n:
                kwargs["nm_tol"] = n["tol"]
            if "max_iter" in n:
                kwargs["nm_max_iter"] = n["max_iter"]
            if "initial_step" in n:
                kwargs["nm_initial_step"] = tuple(n["initial_step"])
            if "starts" in n:
                kwargs["nm_starts"] = tuple(tuple(s) for s in n["starts"])
        for key in ("frame_policy", "frame_t", "frame_stride_s",
                    "bisector_window_s", "seed", "seed_from_trial_id"):
            if key in doc:
                kwargs[key] = doc[key]
        if "grid_resolution" in doc:
            kwargs["grid_resolution"] = tuple(doc["grid_resolution"])
        return cls(**kwargs)

    def fingerprint(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


class WaveObjective:
    """Maximisation target over (gamma_deg, lambda_m, psi_rad) for a frame."""

    def __init__(self, kind: WaveKind, frame: Frame):
        self._code = kind.code
        self._g1x = frame.g1x
        self._g1y = frame.g1y
        self._g2x = frame.g2x
        self._g2y = frame.g2y

    def __call__(self, v) -> float:
        return _kernels.wave_objective(
            self._code, self._g1x, self._g1y, self._g2x, self._g2y,
            v[0] * _DEG2RAD, v[1], v[2])

    def grid_eval(self, axes, surface=None):
        gammas, lams, psis = axes
        bi, bj, bk, best = _kernels.wave_objective_grid(
            self._code, self._g1x, self._g1y, self._g2x, self._g2y,
            np.ascontiguousarray(gammas * _DEG2RAD),
            np.ascontiguousarray(lams, dtype=float),
            np.ascontiguousarray(psis, dtype=float), surface)
        return (bi, bj, bk), best

    def penalized(self, bounds: optim.Bounds):
        """Wrapper for unbounded optimizers: clamps the wavelength and
        subtracts a quadratic penalty for the excursion (angles and phase
        are periodic and need no treatment)."""
        lo, hi = bounds.lambda_m

        def wrapped(v):
            lam = v[1]
            excess = 0.0
            if lam < lo:
                excess = lo - lam
                lam = lo
            elif lam > hi:
                excess = lam - hi
                lam = hi
            val = _kernels.wave_objective(
                self._code, self._g1x, self._g1y, self._g2x, self._g2y,
                v[0] * _DEG2RAD, lam, v[2])
            return val - 10.0 * excess * excess

        return wrapped


@dataclass(frozen=True)
class FitResult:
    """One strategy's best fit on one frame."""

    strategy: Strategy
    params: WaveParams
    c_norm: float
    raw_value: float
    frame_t: float
    evaluations: int
    wall_time_s: float
    config_fingerprint: str
    trial_id: str | None = None
    crossing_angle_deg: float | None = None
    seed: int | None = None
    trace: list | None = None

    def to_row(self) -> list:
        return [self.trial_id or "", repr(self.crossing_angle_deg)
                if self.crossing_angle_deg is not None else "",
                str(self.strategy), repr(self.params.gamma_deg),
                repr(self.params.lambda_m), repr(self.params.psi_rad),
                repr(self.c_norm), self.evaluations,
                repr(self.wall_time_s), repr(self.frame_t),
                self.config_fingerprint]


def fit_frame(frame: Frame, strategy: Strategy,
              config: FitConfig | None = None, *, seed: int | None = None,
              want_trace: bool = False, trial_id: str | None = None,
              crossing_angle_deg: float | None = None) -> FitResult:
    """Maximise the strategy's objective over the bounds on one frame.

    The frame is fitted as given; callers align it with the bisector first
    (see ``fit_trial``). Timing covers the optimizer call only.
    """
    config = config or FitConfig()
    if frame.n1 == 0 or frame.n2 == 0:
        raise errors.GroupEmptyError("fit_frame requires both groups non-empty")
    if frame.diameter() < 1e-6:
        raise errors.DegenerateFrameError(
            "frame diameter below 1e-6 m: objective is constant")
    wobj = WaveObjective(strategy.wave, frame)
    eff_seed = None
    if strategy.optimizer == "sa":
        eff_seed = seed if seed is not None else config.seed
        schedule = replace(config.sa, seed=eff_seed)
        res = optim.simulated_annealing(wobj, config.bounds.as_box(), schedule,
                                        want_trace=want_trace)
    else:
        res = optim.nm_multistart(wobj.penalized(config.bounds),
                                  config.nm_starts,
                                  initial_step=config.nm_initial_step,
                                  tol=config.nm_tol,
                                  max_iter=config.nm_max_iter,
                                  want_trace=want_trace)
    lam = min(max(float(res.x[1]), config.bounds.lambda_m[0]),
              config.bounds.lambda_m[1])
    params = canonicalize(WaveParams(float(res.x[0]), lam, float(res.x[2])))
    raw = objective(strategy.wave, frame, params)
    return FitResult(
        strategy=strategy, params=params, c_norm=raw / 2.0, raw_value=raw,
        frame_t=frame.t, evaluations=res.evaluations,
        wall_time_s=res.wall_time_s,
        config_fingerprint=config.fingerprint(), trial_id=trial_id,
        crossing_angle_deg=crossing_angle_deg, seed=eff_seed,
        trace=res.trace)


@dataclass
class TrialFit:
    """Frame-level results for one (trial, strategy) plus aggregates."""

    results: list[FitResult]
    summary: dict


def _frame_seed(config: FitConfig, trial_id: str, strategy: Strategy,
                frame_k: int) -> int:
    if config.seed_from_trial_id:
        return derive_seed("stripefit", trial_id, str(strategy), frame_k)
    return derive_seed("stripefit", config.seed, trial_id, str(strategy),
                       frame_k)


def fit_trial(trial: Trial, strategy: Strategy,
              config: FitConfig | None = None,
              want_trace: bool = False) -> TrialFit:
    """Fit frames of one trial under the configured frame policy.

    ``single`` fits the frame at ``config.frame_t``; the window policies
    sample the crossing window at ``frame_stride_s`` and either keep every
    result (``per_frame_series``) or only the highest ``c_norm``
    (``best_over_window``, ties to the earliest frame). The summary always
    aggregates over every fitted frame.
    """
    config = config or FitConfig()
    bisector = trial.bisector
    if bisector is None:
        bisector = estimate_bisector(trial, config.bisector_window_s)
    if config.frame_policy == "single":
        if config.frame_t is None:
            raise errors.ConfigError("frame_policy 'single' needs frame_t")
        times = [float(config.frame_t)]
    else:
        t0, t1 = crossing_window(trial)
        n = int(math.floor((t1 - t0) / config.frame_stride_s + 1e-9)) + 1
        times = [t0 + i * config.frame_stride_s for i in range(n)]

    results: list[FitResult] = []
    first_error: errors.StripefitError | None = None
    for t in times:
        try:
            frame = rotate_to_bisector(frame_at(trial, t), bisector)
            seed = _frame_seed(config, trial.trial_id, strategy,
                               int(round(t * trial.sample_rate_hz)))
            results.append(fit_frame(
                frame, strategy, config, seed=seed, want_trace=want_trace,
                trial_id=trial.trial_id,
                crossing_angle_deg=trial.crossing_angle_deg))
        except errors.StripefitError as exc:
            if first_error is None:
                first_error = exc
    if not results:
        raise first_error or errors.EmptyFrameError(
            f"trial {trial.trial_id!r}: no fittable frames")

    summary = {
        "n_frames": len(results),
        "median_gamma_deg": float(np.median([r.params.gamma_deg
                                             for r in results])),
        "median_lambda_m": float(np.median([r.params.lambda_m
                                            for r in results])),
        "max_c_norm": max(r.c_norm for r in results),
    }
    if config.frame_policy == "best_over_window":
        best = results[0]
        for r in results[1:]:
            if r.c_norm > best.c_norm:
                best = r
        return TrialFit([best], summary)
    return TrialFit(results, summary)


@dataclass
class StrategyTable:
    """FitResults keyed by (trial_id, crossing_angle_deg, strategy)."""

    rows: dict[tuple[str, float, str], FitResult] = field(default_factory=dict)
    row_errors: dict[tuple[str, str], str] = field(default_factory=dict)

    def add(self, result: FitResult):
        key = (result.trial_id, result.crossing_angle_deg,
               str(result.strategy))
        if key in self.rows:
            raise errors.StripefitError(f"duplicate table row {key!r}")
        self.rows[key] = result

    def angles(self) -> list[float]:
        return sorted({k[1] for k in self.rows})

    def strategies(self) -> list[str]:
        return sorted({k[2] for k in self.rows})

    def results_at(self, angle: float, strategy: str) -> list[FitResult]:
        picked = [r for (tid, a, s), r in self.rows.items()
                  if a == angle and s == strategy]
        picked.sort(key=lambda r: r.trial_id)
        return picked

    def c_values(self, angle: float, strategy: str) -> list[float]:
        """Maximised objective values (c_norm rescaled to [-2, 2])."""
        return [r.raw_value for r in self.results_at(angle, strategy)]

    def gamma_values(self, angle: float, strategy: str) -> list[float]:
        return [r.params.gamma_deg for r in self.results_at(angle, strategy)]

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for key in sorted(self.rows):
            writer.writerow(self.rows[key].to_row())
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StrategyTable":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise errors.ParseError("empty results CSV") from None
        if [h.strip() for h in header] != list(RESULT_COLUMNS):
            raise errors.SchemaError(
                f"expected header {','.join(RESULT_COLUMNS)}", line=1)
        table = cls()
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RESULT_COLUMNS):
                raise errors.ParseError(
                    f"expected {len(RESULT_COLUMNS)} fields", line=line_no)
            try:
                c_norm = float(row[6])
                result = FitResult(
                    strategy=Strategy.parse(row[2]),
                    params=WaveParams(float(row[3]), float(row[4]),
                                      float(row[5])),
                    c_norm=c_norm,
                    raw_value=c_norm * 2.0,
                    frame_t=float(row[9]),
                    evaluations=int(row[7]),
                    wall_time_s=float(row[8]),
                    config_fingerprint=row[10],
                    trial_id=row[0],
                    crossing_angle_deg=float(row[1]),
                )
            except (ValueError, errors.StripefitError) as exc:
                raise errors.ParseError(str(exc), line=line_no) from None
            table.add(result)
        return table


def _batch_row(task) -> FitResult | str:
    trial, strategy, config = task
    try:
        fit = fit_trial(trial, strategy, config)
        best = fit.results[0]
        for r in fit.results[1:]:
            if r.c_norm > best.c_norm:
                best = r
        return best
    except errors.StripefitError as exc:
        return f"{type(exc).__name__}: {exc}"


def run_batch(trials: TrialSet, strategies, config: FitConfig | None = None,
              jobs: int = 1) -> StrategyTable:
    """Fit every trial with every strategy.

    Row failures are recorded and the batch continues; it raises only when
    every row failed. Rows are computed independently, so the table is
    identical for any ``jobs`` count.
    """
    config = config or FitConfig()
    strategies = [Strategy.parse(s) if isinstance(s, str) else s
                  for s in strategies]
    if len(trials) == 0 or not strategies:
        raise errors.ConfigError("run_batch needs >= 1 trial and strategy")
    tasks = [(trial, strategy, config)
             for trial in trials for strategy in strategies]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_batch_row, tasks, chunksize=1))
    else:
        outcomes = [_batch_row(t) for t in tasks]

    table = StrategyTable()
    failures = 0
    for (trial, strategy, _), outcome in zip(tasks, outcomes):
        if isinstance(outcome, FitResult):
            table.add(outcome)
        else:
            failures += 1
            table.row_errors[(trial.trial_id, str(strategy))] = outcome
    if failures == len(tasks):
        raise errors.StripefitError(
            f"all {failures} batch rows failed; first: "
            f"{next(iter(table.row_errors.values()))}")
    return table
