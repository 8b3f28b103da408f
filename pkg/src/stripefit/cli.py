"""Command-line interface.

Subcommands: ``ingest`` (validate + filter trajectories), ``synth``
(synthetic data with ground truth), ``fit`` (one trial), ``batch``
(trials x strategies), ``stats`` (strategy comparison tables), ``oracle``
(grid-search surface export). Every run writes ``resolved_config.json``
into the output directory so it can be reproduced exactly; logs go to
stderr at the level named by ``STRIPEFIT_LOG``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, errors, stats
from . import _kernels
from .dspfilter import filter_trial
from .model import (TrialSet, crossing_window, frame_at, load_trials,
                    rotate_to_bisector, serialize_trials)
from .optim import Bounds, SASchedule, grid_search
from .patternfit import (ALL_STRATEGIES, FitConfig, Strategy, StrategyTable,
                         WaveObjective, fit_trial, run_batch)
from .synth import StripeSpec, generate_crossing_trial, generate_striped_frame
from .waveform import WaveKind

log = logging.getLogger("stripefit")


# --------------------------------------------------------------------------
# argument helpers

def _strategy_arg(text: str) -> Strategy:
    try:
        return Strategy.parse(text)
    except errors.ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _strategies_arg(text: str) -> list[Strategy]:
    if text.strip().lower() == "all":
        return list(ALL_STRATEGIES)
    return [_strategy_arg(part) for part in text.split(",") if part.strip()]


def _wave_arg(text: str) -> WaveKind:
    try:
        return WaveKind.parse(text)
    except errors.ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _vector_arg(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}") from None


def _resolution_arg(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        parts = ()
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected GAMMAxLAMBDAxPSI (e.g. 181x96x64), got {text!r}")
    return parts


def _add_config_flags(p: argparse.ArgumentParser, batch: bool = False):
    p.add_argument("--config", metavar="FILE",
                   help="JSON file with fit configuration (flags override)")
    p.add_argument("--policy", choices=("single", "best_over_window",
                                        "per_frame_series"), default=None)
    p.add_argument("--frame-t", type=float, default=None,
                   help="frame time for --policy single")
    p.add_argument("--stride", type=float, default=None,
                   help="frame stride in seconds for window policies")
    p.add_argument("--lambda-min", type=float, default=None)
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--sa-t0", type=float, default=None)
    p.add_argument("--sa-alpha", type=float, default=None)
    p.add_argument("--sa-steps", type=int, default=None,
                   help="annealing proposals per temperature level")
    p.add_argument("--sa-tmin", type=float, default=None)
    p.add_argument("--sa-step-scale", type=_vector_arg, default=None,
                   metavar="G,L,P", help="proposal widths (deg, m, rad)")
    p.add_argument("--nm-tol", type=float, default=None)
    p.add_argument("--nm-max-iter", type=int, default=None)
    if batch:
        seed_group = p.add_mutually_exclusive_group()
        seed_group.add_argument("--seed", type=int, default=None)
        seed_group.add_argument("--seed-from-trial-id", action="store_true")
    else:
        p.add_argument("--seed", type=int, default=None)


def _add_input_flags(p: argparse.ArgumentParser):
    p.add_argument("input", help="canonical CSV of trials")
    p.add_argument("--metadata", metavar="FILE", default=None,
                   help="per-trial metadata JSON (bisector, sample rate)")
    p.add_argument("--bisector", type=_vector_arg, default=None,
                   metavar="BX,BY", help="override bisector for all trials")
    p.add_argument("--trial-id", default=None,
                   help="restrict to one trial of the input")
    p.add_argument("--default-fs", type=float, default=120.0,
                   help="sample rate when neither metadata nor spacing "
                        "determine it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stripefit",
        description="Detect striped self-organisation in crossing flows by "
                    "fitting oriented periodic waveforms.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and low-pass filter a "
                                      "trajectory CSV")
    _add_input_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--filter-cutoff-hz", type=float, default=0.5)
    p.add_argument("--filter-order", type=int, default=4, choices=(2, 4))
    p.add_argument("--no-filter", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate synthetic data with ground "
                                     "truth")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("trial", "frame"), default="trial")
    p.add_argument("--angle", type=float, default=90.0)
    p.add_argument("--n1", type=int, default=18)
    p.add_argument("--n2", type=int, default=18)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--wavelength", type=float, default=2.0)
    p.add_argument("--jitter", type=float, default=0.0,
                   help="position noise std dev in metres")
    p.add_argument("--gamma", type=float, default=90.0,
                   help="frame mode: stripe orientation")
    p.add_argument("--psi", type=float, default=0.0,
                   help="frame mode: stripe phase")
    p.add_argument("--extent", type=float, default=6.0,
                   help="frame mode: half-width of the generated frame")
    p.add_argument("--speed", type=float, default=1.3)
    p.add_argument("--duration", type=float, default=8.0)
    p.add_argument("--fs", type=float, default=120.0)
    p.add_argument("--lateral-spacing", type=float, default=0.6)
    p.add_argument("--bands", type=int, default=None,
                   help="trial mode: stripe bands per group")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit one trial with one strategy")
    _add_input_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", type=_strategy_arg, default=None,
                   required=True)
    p.add_argument("--trace", action="store_true",
                   help="also write optimizer traces as JSON")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("batch", help="fit all trials with all strategies")
    _add_input_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--strategies", type=_strategies_arg, default="all",
                   help="comma-separated list or 'all'")
    p.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p, batch=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("stats", help="strategy comparison tables from batch "
                                     "results")
    p.add_argument("results", help="results CSV produced by batch/fit")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--expected-gamma", type=float, default=90.0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("oracle", help="export the grid-search objective "
                                      "surface for one frame")
    _add_input_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--wave", type=_wave_arg, default=WaveKind.SQUARE)
    p.add_argument("--frame-t", type=float, default=None,
                   help="frame time; default is the crossing-window middle")
    p.add_argument("--resolution", type=_resolution_arg,
                   default=(181, 96, 64))
    p.add_argument("--lambda-min", type=float, default=None)
    p.add_argument("--lambda-max", type=float, default=None)
    p.set_defaults(func=cmd_oracle)
    return parser


# --------------------------------------------------------------------------
# shared plumbing

def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _resolved_config(args, extra: dict | None = None) -> dict:
    doc = {
        "command": args.command,
        "argv": sys.argv[1:],
        "package_version": __version__,
        "kernel_backend": _kernels.backend(),
    }
    if extra:
        doc.update(extra)
    return doc


def _build_fit_config(args) -> FitConfig:
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            config = FitConfig.from_dict(json.load(fh))
    else:
        config = FitConfig()
    bounds = config.bounds
    if args.lambda_min is not None or args.lambda_max is not None:
        lo = args.lambda_min if args.lambda_min is not None else bounds.lambda_m[0]
        hi = args.lambda_max if args.lambda_max is not None else bounds.lambda_m[1]
        bounds = replace(bounds, lambda_m=(lo, hi))
    sa = config.sa
    for attr, flag in (("t0", "sa_t0"), ("alpha", "sa_alpha"),
                       ("steps_per_temp", "sa_steps"), ("t_min", "sa_tmin"),
                       ("step_scale", "sa_step_scale")):
        value = getattr(args, flag, None)
        if value is not None:
            sa = replace(sa, **{attr: value})
    updates: dict = {"bounds": bounds, "sa": sa}
    if getattr(args, "nm_tol", None) is not None:
        updates["nm_tol"] = args.nm_tol
    if getattr(args, "nm_max_iter", None) is not None:
        updates["nm_max_iter"] = args.nm_max_iter
    if getattr(args, "policy", None) is not None:
        updates["frame_policy"] = args.policy
    if getattr(args, "frame_t", None) is not None:
        updates["frame_t"] = args.frame_t
        if getattr(args, "policy", None) is None:
            updates["frame_policy"] = "single"
    if getattr(args, "stride", None) is not None:
        updates["frame_stride_s"] = args.stride
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "seed_from_trial_id", False):
        updates["seed_from_trial_id"] = True
    return replace(config, **updates)


def _load_input(args) -> TrialSet:
    trials = load_trials(args.input, metadata_path=args.metadata,
                         default_fs=args.default_fs)
    if args.bisector is not None:
        if len(args.bisector) != 2:
            raise errors.ConfigError("--bisector needs two components")
        bx, by = args.bisector
        norm = math.hypot(bx, by)
        if norm < 1e-12:
            raise errors.InvalidDirectionError("--bisector has zero norm")
        bis = (bx / norm, by / norm)
        trials = TrialSet.from_trials(
            replace(t, bisector=bis) for t in trials)
    if args.trial_id is not None:
        if args.trial_id not in trials:
            raise errors.ConfigError(
                f"trial {args.trial_id!r} not in {args.input}; available: "
                f"{', '.join(trials.ids())}")
        trials = TrialSet.from_trials([trials[args.trial_id]])
    return trials


def _single_trial(trials: TrialSet, what: str):
    if len(trials) != 1:
        raise errors.ConfigError(
            f"{what} works on one trial; input has {len(trials)} "
            f"(use --trial-id)")
    return next(iter(trials))


# --------------------------------------------------------------------------
# commands

def cmd_ingest(args) -> int:
    out = _outdir(args)
    trials = _load_input(args)
    if not args.no_filter:
        trials = TrialSet.from_trials(
            filter_trial(t, cutoff_hz=args.filter_cutoff_hz,
                         order=args.filter_order) for t in trials)
    (out / "trials.csv").write_text(serialize_trials(trials),
                                    encoding="utf-8")
    meta = [{"trial_id": t.trial_id, "sample_rate_hz": t.sample_rate_hz,
             **({"bisector": list(t.bisector)} if t.bisector else {})}
            for t in trials]
    _write_json(out / "metadata.json", meta)
    _write_json(out / "resolved_config.json", _resolved_config(args, {
        "filter": None if args.no_filter else {
            "cutoff_hz": args.filter_cutoff_hz, "order": args.filter_order},
        "n_trials": len(trials),
    }))
    log.info("ingested %d trials -> %s", len(trials), out / "trials.csv")
    return 0


def cmd_synth(args) -> int:
    out = _outdir(args)
    if args.mode == "frame":
        spec = StripeSpec(gamma_deg=args.gamma, lambda_m=args.wavelength,
                          psi_rad=args.psi, n1=args.n1, n2=args.n2,
                          jitter_sd_m=args.jitter, extent_m=args.extent,
                          seed=args.seed)
        frame, truth = generate_striped_frame(spec)
        rows = ["trial_id,crossing_angle_deg,pedestrian_id,group,t,x,y"]
        tid = f"synth-frame-{args.seed}"
        for g, arr in ((1, frame.g1), (2, frame.g2)):
            for i, (x, y) in enumerate(arr):
                rows.append(f"{tid},{args.angle!r},g{g}_{i:03d},{g},0.0,"
                            f"{x!r},{y!r}")
        (out / "trial.csv").write_text("\n".join(rows) + "\n",
                                       encoding="utf-8")
        _write_json(out / "metadata.json",
                    [{"trial_id": tid, "bisector": [1.0, 0.0],
                      "sample_rate_hz": 120.0}])
        truth_doc = {"gamma_deg": truth.gamma_deg,
                     "lambda_m": truth.lambda_m, "psi_rad": truth.psi_rad,
                     "seed": args.seed, "jitter_sd_m": args.jitter}
    else:
        trial = generate_crossing_trial(
            args.angle, n1=args.n1, n2=args.n2, speed_mps=args.speed,
            duration_s=args.duration, fs_hz=args.fs,
            lateral_spacing_m=args.lateral_spacing, seed=args.seed,
            wavelength_m=args.wavelength, jitter_sd_m=args.jitter,
            bands_per_group=args.bands)
        ts = TrialSet.from_trials([trial])
        (out / "trial.csv").write_text(serialize_trials(ts), encoding="utf-8")
        _write_json(out / "metadata.json",
                    [{"trial_id": trial.trial_id, "bisector": [1.0, 0.0],
                      "sample_rate_hz": trial.sample_rate_hz}])
        truth_doc = {"gamma_deg": 90.0, "lambda_m": args.wavelength,
                     "psi_rad": 0.0, "seed": args.seed,
                     "jitter_sd_m": args.jitter}
    _write_json(out / "ground_truth.json", truth_doc)
    _write_json(out / "resolved_config.json", _resolved_config(args, {
        "synth": {k: getattr(args, k) for k in
                  ("mode", "angle", "n1", "n2", "seed", "wavelength",
                   "jitter", "gamma", "psi", "extent", "speed", "duration",
                   "fs", "lateral_spacing", "bands")},
    }))
    log.info("wrote synthetic %s -> %s", args.mode, out / "trial.csv")
    return 0


def cmd_fit(args) -> int:
    out = _outdir(args)
    config = _build_fit_config(args)
    trials = _load_input(args)
    trial = _single_trial(trials, "fit")
    fit = fit_trial(trial, args.strategy, config, want_trace=args.trace)
    table = StrategyTable()
    for r in fit.results:
        if (r.trial_id, r.crossing_angle_deg, str(r.strategy)) in table.rows:
            continue  # per-frame series share the key; keep the first
        table.add(r)
    (out / "fit_results.csv").write_text(table.to_csv(), encoding="utf-8")
    if args.trace:
        _write_json(out / "traces.json", [
            {"frame_t": r.frame_t, "strategy": str(r.strategy),
             "seed": r.seed, "trace": r.trace} for r in fit.results])
    _write_json(out / "resolved_config.json", _resolved_config(args, {
        "fit_config": config.to_dict(), "strategy": str(args.strategy),
        "summary": fit.summary,
    }))
    r = max(fit.results, key=lambda r: r.c_norm)
    print(f"{trial.trial_id}: {args.strategy} c/c_max={r.c_norm:.4f} "
          f"gamma={r.params.gamma_deg:.2f} deg "
          f"lambda={r.params.lambda_m:.3f} m at t={r.frame_t:.2f} s")
    return 0


def cmd_batch(args) -> int:
    out = _outdir(args)
    strategies = (args.strategies if isinstance(args.strategies, list)
                  else list(ALL_STRATEGIES))
    uses_sa = any(s.optimizer == "sa" for s in strategies)
    if uses_sa and args.seed is None and not args.seed_from_trial_id:
        raise errors.ConfigError(
            "batch with SA strategies needs --seed N or --seed-from-trial-id")
    config = _build_fit_config(args)
    trials = _load_input(args)
    table = run_batch(trials, strategies, config, jobs=args.jobs)
    (out / "results.csv").write_text(table.to_csv(), encoding="utf-8")
    if table.row_errors:
        lines = ["trial_id,strategy,error"]
        lines += [f"{tid},{s},{msg!r}" for (tid, s), msg
                  in sorted(table.row_errors.items())]
        (out / "row_errors.csv").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
        log.warning("%d batch rows failed (see row_errors.csv)",
                    len(table.row_errors))
    _write_json(out / "resolved_config.json", _resolved_config(args, {
        "fit_config": config.to_dict(),
        "strategies": [str(s) for s in strategies],
        "jobs": args.jobs,
        "n_rows": len(table.rows),
        "n_row_errors": len(table.row_errors),
    }))
    print(f"fitted {len(table.rows)} rows "
          f"({len(table.row_errors)} failures) -> {out / 'results.csv'}")
    return 0


def cmd_stats(args) -> int:
    out = _outdir(args)
    with open(args.results, "r", encoding="utf-8") as fh:
        table = StrategyTable.from_csv(fh.read())
    present = table.strategies()
    pairs = [p for p in stats.DEFAULT_PAIRS
             if p[0] in present and p[1] in present]
    anova_records = (stats.strategy_comparison(table, pairs=pairs,
                                               alpha=args.alpha)
                     if pairs else [])
    ttest_records = stats.bisector_normal_test(
        table, expected_gamma_deg=args.expected_gamma, alpha=args.alpha)

    lines = ["crossing_angle_deg,strategy_a,strategy_b,f_stat,df_between,"
             "df_within,p_value,eta_sq,ss_between,ss_within,significant"]
    for rec in anova_records:
        r = rec.report
        lines.append(f"{rec.crossing_angle_deg!r},{rec.strategies[0]},"
                     f"{rec.strategies[1]},{r.f_stat!r},{r.df_between},"
                     f"{r.df_within},{r.p_value!r},{r.eta_sq!r},"
                     f"{r.ss_between!r},{r.ss_within!r},{rec.significant}")
    (out / "anova.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["crossing_angle_deg,strategy,t_stat,df,p_value,significant,error"]
    for rec in ttest_records:
        if rec.report is None:
            lines.append(f"{rec.crossing_angle_deg!r},{rec.strategy},,,,,"
                         f"{rec.error!r}")
        else:
            lines.append(f"{rec.crossing_angle_deg!r},{rec.strategy},"
                         f"{rec.report.t_stat!r},{rec.report.df},"
                         f"{rec.report.p_value!r},{rec.significant},")
    (out / "ttests.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    text_parts = []
    if anova_records:
        text_parts.append("Strategy comparison (one-way ANOVA on maximised "
                          "objective)")
        text_parts.append(stats.render_anova_table(anova_records))
        text_parts.append("")
    text_parts.append(stats.render_ttest_table(
        ttest_records, expected_gamma_deg=args.expected_gamma))
    text = "\n".join(text_parts) + "\n"
    (out / "tables.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    _write_json(out / "resolved_config.json", _resolved_config(args, {
        "alpha": args.alpha, "expected_gamma_deg": args.expected_gamma,
        "results": args.results,
    }))
    return 0


def cmd_oracle(args) -> int:
    out = _outdir(args)
    trials = _load_input(args)
    trial = _single_trial(trials, "oracle")
    bisector = trial.bisector
    if bisector is None:
        from .model import estimate_bisector
        bisector = estimate_bisector(trial)
    if args.frame_t is not None:
        t = args.frame_t
    else:
        t0, t1 = crossing_window(trial)
        t = (t0 + t1) / 2.0
    frame = rotate_to_bisector(frame_at(trial, t), bisector)
    bounds = Bounds()
    if args.lambda_min is not None or args.lambda_max is not None:
        lo = args.lambda_min if args.lambda_min is not None else bounds.lambda_m[0]
        hi = args.lambda_max if args.lambda_max is not None else bounds.lambda_m[1]
        bounds = replace(bounds, lambda_m=(lo, hi))
    wobj = WaveObjective(args.wave, frame)
    res = grid_search(wobj, bounds.as_box(), args.resolution,
                      return_surface=True)
    surface = res.diagnostics["surface"]
    gammas, lams, _ = res.diagnostics["axes"]
    best_over_psi = surface.max(axis=2)
    lines = ["gamma_deg,lambda_m,c"]
    for i, g in enumerate(gammas):
        for j, lam in enumerate(lams):
            lines.append(f"{g!r},{lam!r},{best_over_psi[i, j]!r}")
    (out / "surface.csv").write_text("\n".join(lines) + "\n",
                                     encoding="utf-8")
    _write_json(out / "best.json", {
        "wave": args.wave.value, "frame_t": t,
        "gamma_deg": float(res.x[0]), "lambda_m": float(res.x[1]),
        "psi_rad": float(res.x[2]), "value": res.value,
        "c_norm": res.value / 2.0,
        "resolution": list(args.resolution),
        "evaluations": res.evaluations,
    })
    _write_json(out / "resolved_config.json", _resolved_config(args, {
        "wave": args.wave.value, "frame_t": t,
        "resolution": list(args.resolution),
    }))
    print(f"oracle best: c={res.value:.4f} gamma={res.x[0]:.2f} deg "
          f"lambda={res.x[1]:.3f} m (grid {'x'.join(map(str, args.resolution))})")
    return 0


# --------------------------------------------------------------------------

def main(argv=None) -> int:
    level = os.environ.get("STRIPEFIT_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.StripefitError as exc:
        print(f"stripefit {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"stripefit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
