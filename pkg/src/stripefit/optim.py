"""Derivative-free maximisers over box domains.

Three methods share one result type: the Nelder-Mead simplex (deterministic,
local), simulated annealing (stochastic, seeded, global), and exhaustive
grid search (the oracle both are validated against). All maximise; the
objective is any callable of a flat real vector.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import errors
from ._kernels import Pcg32

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BoxAxis:
    """One box dimension; periodic axes wrap, others reflect proposals."""

    lo: float
    hi: float
    periodic: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)
                and self.hi > self.lo):
            raise errors.ConfigError(
                f"invalid axis bounds ({self.lo!r}, {self.hi!r})")


def as_box(axes) -> tuple[BoxAxis, ...]:
    """Normalise a bounds description into a tuple of BoxAxis."""
    out = []
    for ax in axes:
        if isinstance(ax, BoxAxis):
            out.append(ax)
        else:
            out.append(BoxAxis(*ax))
    if not out:
        raise errors.ConfigError("empty box")
    return tuple(out)


@dataclass(frozen=True)
class Bounds:
    """Search region for wave parameters (degrees, metres, radians)."""

    gamma_deg: tuple[float, float] = (0.0, 180.0)
    # 0.7 m floor: below typical inter-person spacing, and high enough to
    # exclude the exact lambda/3 sub-harmonic of 2 m stripes (an odd
    # sub-harmonic of a perfect stripe pattern separates the groups equally
    # well, making the wavelength unidentifiable if left in range)
    lambda_m: tuple[float, float] = (0.7, 10.0)
    psi_rad: tuple[float, float] = (0.0, _TWO_PI)

    def __post_init__(self):
        lo, hi = self.lambda_m
        if not (lo > 0 and hi > lo):
            raise errors.ConfigError(
                f"wavelength bounds need 0 < lo < hi, got {self.lambda_m!r}")

    def as_box(self) -> tuple[BoxAxis, ...]:
        return (BoxAxis(*self.gamma_deg, periodic=True),
                BoxAxis(*self.lambda_m, periodic=False),
                BoxAxis(*self.psi_rad, periodic=True))


@dataclass(frozen=True)
class SASchedule:
    """Geometric cooling schedule and proposal scales for annealing.

    ``reinject_frac`` switches the chain into an exploitation mode: once the
    temperature falls below ``reinject_frac * t0``, every temperature change
    restarts the walk from the best point seen so far. Above it the chain
    wanders freely (restarting too early anchors the search to the first
    mediocre region it finds).

    The default step scales deliberately exceed the waveform parameter
    ranges: while ``T`` is warm the folded proposals are near-uniform over
    the box (global exploration remembered by the best-ever tracker), and
    the same geometric cooling carries the widths below the scale of the
    objective's top plateaus by ``t_min``. Tuned so a single run reliably
    finds the global stripe fit on frames spanning tens of wavelengths.
    """

    t0: float = 1.0
    alpha: float = 0.99
    steps_per_temp: int = 320
    t_min: float = 1.25e-4
    step_scale: tuple[float, ...] = (3600.0, 100.0, 63.0)
    seed: int = 0
    reinject_frac: float = 0.1

    def __post_init__(self):
        if not (self.t0 > self.t_min > 0.0):
            raise errors.ConfigError("need t0 > t_min > 0")
        if not 0.0 < self.alpha < 1.0:
            raise errors.ConfigError("cooling factor alpha must be in (0, 1)")
        if self.steps_per_temp < 1:
            raise errors.ConfigError("steps_per_temp must be >= 1")
        if any(s <= 0 for s in self.step_scale):
            raise errors.ConfigError("step scales must be positive")
        if self.reinject_frac < 0.0:
            raise errors.ConfigError("reinject_frac must be >= 0")


@dataclass
class OptimResult:
    """Outcome of one optimisation run (maximisation)."""

    x: np.ndarray
    value: float
    evaluations: int
    iterations: int
    wall_time_s: float
    trace: list[tuple[int, float]] | None = None
    diagnostics: dict = field(default_factory=dict)


def _checked(obj, x, evals):
    v = float(obj(x))
    if not math.isfinite(v):
        raise errors.NonFiniteObjectiveError(
            f"objective returned {v!r} at {list(x)!r} (evaluation {evals})")
    return v


# --------------------------------------------------------------------------
# Nelder-Mead

def nelder_mead(obj, x0, initial_step=0.1, tol: float = 1e-8,
                max_iter: int = 1000, want_trace: bool = False) -> OptimResult:
    """Simplex maximisation with the standard coefficients.

    Reflection 1, expansion 2, contraction 0.5, shrink 0.5; terminates when
    the spread of simplex objective values drops below ``tol`` or after
    ``max_iter`` iterations. Deterministic for fixed inputs.
    """
    start = time.perf_counter()
    x0 = np.asarray(x0, dtype=float)
    k = x0.size
    if k < 1:
        raise errors.ConfigError("x0 must have at least one coordinate")
    steps = np.broadcast_to(np.asarray(initial_step, dtype=float), (k,))

    evals = 0
    # minimise g = -obj
    def g(x):
        nonlocal evals
        evals += 1
        return -_checked(obj, x, evals)

    simplex = [x0.copy()]
    for i in range(k):
        v = x0.copy()
        v[i] += steps[i]
        simplex.append(v)
    values = [g(v) for v in simplex]

    trace: list[tuple[int, float]] | None = [] if want_trace else None
    iterations = 0
    while iterations < max_iter:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if want_trace:
            trace.append((iterations, -values[0]))
        if values[-1] - values[0] < tol:
            break
        iterations += 1
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        gr = g(xr)
        if gr < values[0]:
            xe = centroid + 2.0 * (xr - centroid)
            ge = g(xe)
            if ge < gr:
                simplex[-1], values[-1] = xe, ge
            else:
                simplex[-1], values[-1] = xr, gr
        elif gr < values[-2]:
            simplex[-1], values[-1] = xr, gr
        else:
            if gr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                gc = g(xc)
                better = gc <= gr
            else:
                xc = centroid + 0.5 * (worst - centroid)
                gc = g(xc)
                better = gc < values[-1]
            if better:
                simplex[-1], values[-1] = xc, gc
            else:
                for i in range(1, k + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = g(simplex[i])

    order = np.argsort(values, kind="stable")
    best = simplex[order[0]]
    return OptimResult(
        x=np.asarray(best, dtype=float),
        value=-values[order[0]],
        evaluations=evals,
        iterations=iterations,
        wall_time_s=time.perf_counter() - start,
        trace=trace,
        diagnostics={"method": "nelder_mead", "tol": tol},
    )


def nm_multistart(obj, starts, initial_step=0.1, tol: float = 1e-8,
                  max_iter: int = 1000, want_trace: bool = False) -> OptimResult:
    """Best Nelder-Mead result over a list of starts (reduced in order)."""
    starts = [np.asarray(s, dtype=float) for s in starts]
    if not starts:
        raise errors.ConfigError("nm_multistart needs at least one start")
    best: OptimResult | None = None
    evals = 0
    iters = 0
    wall = 0.0
    per_start = []
    for s in starts:
        res = nelder_mead(obj, s, initial_step=initial_step, tol=tol,
                          max_iter=max_iter, want_trace=want_trace)
        evals += res.evaluations
        iters += res.iterations
        wall += res.wall_time_s
        per_start.append(res.value)
        if best is None or res.value > best.value:
            best = res
    return OptimResult(
        x=best.x,
        value=best.value,
        evaluations=evals,
        iterations=iters,
        wall_time_s=wall,
        trace=best.trace,
        diagnostics={"method": "nm_multistart", "n_starts": len(starts),
                     "per_start_values": per_start},
    )


# --------------------------------------------------------------------------
# simulated annealing

def _fold(v: float, axis: BoxAxis) -> float:
    """Wrap periodic axes; reflect non-periodic proposals at the walls."""
    width = axis.hi - axis.lo
    if axis.periodic:
        return axis.lo + ((v - axis.lo) % width)
    y = (v - axis.lo) % (2.0 * width)
    if y > width:
        y = 2.0 * width - y
    return axis.lo + y


def simulated_annealing(obj, bounds, schedule: SASchedule,
                        want_trace: bool = False) -> OptimResult:
    """Metropolis annealing with Gaussian proposals on a box.

    Moves with non-negative gain are always accepted, others with
    probability ``exp(gain / T)``. Proposal widths are the schedule's
    per-axis scales shrunk by ``T / t0``. The start point is drawn
    uniformly from the box; once the temperature drops below
    ``reinject_frac * t0`` the chain restarts from the best point seen so
    far at each temperature change, so the cold phase refines the best
    basin instead of wherever the hot walk drifted. Draw order
    per proposal: one normal per axis, then one uniform only when the move
    worsens the objective, making runs bit-reproducible from the seed.
    """
    start_time = time.perf_counter()
    box = as_box(bounds)
    k = len(box)
    if len(schedule.step_scale) != k:
        raise errors.ConfigError(
            f"step_scale has {len(schedule.step_scale)} entries for "
            f"{k} axes")
    rng = Pcg32(schedule.seed)
    x = [rng.uniform(ax.lo, ax.hi) for ax in box]
    f = _checked(obj, x, 1)
    evals = 1
    best_x = list(x)
    best_f = f
    trace: list[tuple[int, float]] | None = [(0, best_f)] if want_trace else None

    t = schedule.t0
    proposals = 0
    accepted = 0
    accepted_downhill = 0
    n_temps = 0
    # hot-loop locals
    normal = rng.normal
    next_double = rng.next_double
    exp = math.exp
    isfinite = math.isfinite
    axes = [(ax.lo, ax.hi, ax.hi - ax.lo, ax.periodic) for ax in box]
    scale = list(schedule.step_scale)
    steps = schedule.steps_per_temp
    reinject_below = schedule.reinject_frac * schedule.t0
    while t >= schedule.t_min:
        n_temps += 1
        shrink = t / schedule.t0
        widths = [s * shrink for s in scale]
        for _ in range(steps):
            cand = []
            for i in range(k):
                v = x[i] + normal() * widths[i]
                lo, hi, width, periodic = axes[i]
                if periodic:
                    v = lo + ((v - lo) % width)
                elif not lo <= v <= hi:
                    y = (v - lo) % (2.0 * width)
                    if y > width:
                        y = 2.0 * width - y
                    v = lo + y
                cand.append(v)
            proposals += 1
            evals += 1
            fc = obj(cand)
            if not isfinite(fc):
                raise errors.NonFiniteObjectiveError(
                    f"objective returned {fc!r} at {cand!r} "
                    f"(evaluation {evals})")
            delta = fc - f
            if delta >= 0.0:
                accept = True
            else:
                accept = next_double() < exp(delta / t)
                if accept:
                    accepted_downhill += 1
            if accept:
                x = cand
                f = fc
                accepted += 1
                if f > best_f:
                    best_f = f
                    best_x = x
                    if want_trace:
                        trace.append((proposals, best_f))
        t *= schedule.alpha
        if t < reinject_below and f < best_f:
            x = best_x
            f = best_f

    return OptimResult(
        x=np.asarray(best_x, dtype=float),
        value=float(best_f),
        evaluations=evals,
        iterations=proposals,
        wall_time_s=time.perf_counter() - start_time,
        trace=trace,
        diagnostics={"method": "simulated_annealing", "seed": schedule.seed,
                     "n_temps": n_temps, "accepted": accepted,
                     "accepted_downhill": accepted_downhill},
    )


# --------------------------------------------------------------------------
# grid search

def grid_axes(bounds, resolution) -> list[np.ndarray]:
    """Axis value grids; periodic axes exclude their (equivalent) endpoint."""
    box = as_box(bounds)
    if np.isscalar(resolution):
        resolution = [int(resolution)] * len(box)
    if len(resolution) != len(box):
        raise errors.ConfigError("resolution must give one count per axis")
    axes = []
    for ax, n in zip(box, resolution):
        n = int(n)
        if n < 2:
            raise errors.ConfigError("grid resolution must be >= 2 per axis")
        axes.append(np.linspace(ax.lo, ax.hi, n, endpoint=not ax.periodic))
    return axes


def grid_search(obj, bounds, resolution, return_surface: bool = False) -> OptimResult:
    """Exhaustive maximisation over the Cartesian grid.

    Ties break to the lexicographically smallest grid point. Objects
    exposing ``grid_eval(axes, surface)`` (vectorised evaluation) are used
    directly; otherwise each grid point is evaluated through ``obj``.
    The returned value is a certificate: no evaluated grid point exceeds it.
    """
    start_time = time.perf_counter()
    axes = grid_axes(bounds, resolution)
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape))
    if total > 10 ** 8:
        raise errors.TooLargeGridError(
            f"grid of {total} points exceeds the 1e8 guard")
    surface = np.empty(shape) if return_surface else None

    grid_eval = getattr(obj, "grid_eval", None)
    if grid_eval is not None:
        idx, best = grid_eval(axes, surface)
    else:
        best = -math.inf
        idx = (0,) * len(shape)
        evals = 0
        for multi in np.ndindex(*shape):
            point = [axes[d][i] for d, i in enumerate(multi)]
            evals += 1
            v = _checked(obj, point, evals)
            if surface is not None:
                surface[multi] = v
            if v > best:
                best = v
                idx = multi

    x = np.array([axes[d][i] for d, i in enumerate(idx)])
    diagnostics = {"method": "grid_search", "resolution": shape,
                   "index": tuple(int(i) for i in idx)}
    if return_surface:
        diagnostics["surface"] = surface
        diagnostics["axes"] = axes
    return OptimResult(
        x=x,
        value=float(best),
        evaluations=total,
        iterations=total,
        wall_time_s=time.perf_counter() - start_time,
        diagnostics=diagnostics,
    )
