"""Hypothesis tests for comparing fitting strategies.

One-way ANOVA (with eta-squared effect size) compares the maximised
objective values of strategy pairs per crossing angle; one-sample t-tests
check fitted stripe orientations against the 90-degree expectation. Both
tails come from the regularized incomplete beta function, evaluated by
continued fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors

#: strategy pairs compared by default: same waveform, different optimizer
DEFAULT_PAIRS = (("sine+nm", "sine+sa"), ("square+nm", "square+sa"))


@dataclass(frozen=True)
class AnovaReport:
    """One-way ANOVA outcome with raw sums of squares for audit."""

    f_stat: float
    df_between: int
    df_within: int
    p_value: float
    eta_sq: float
    ss_between: float
    ss_within: float


@dataclass(frozen=True)
class TTestReport:
    """One-sample t-test outcome (two-sided p)."""

    t_stat: float
    df: int
    p_value: float


@dataclass(frozen=True)
class ComparisonRecord:
    crossing_angle_deg: float
    strategies: tuple[str, str]
    report: AnovaReport
    significant: bool


@dataclass(frozen=True)
class GammaTestRecord:
    crossing_angle_deg: float
    strategy: str
    report: TTestReport | None
    significant: bool | None
    error: str | None = None


# --------------------------------------------------------------------------
# regularized incomplete beta

_CF_MAX_ITER = 600
_CF_EPS = 1e-16
_CF_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise errors.DomainError(
        f"incomplete beta continued fraction did not converge for "
        f"a={a}, b={b}, x={x}")


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not (math.isfinite(a) and math.isfinite(b) and a > 0 and b > 0):
        raise errors.DomainError(f"need a, b > 0, got a={a!r}, b={b!r}")
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise errors.DomainError(f"need x in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


# --------------------------------------------------------------------------
# tests

def one_way_anova(groups) -> AnovaReport:
    """One-way ANOVA across two or more samples."""
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise errors.SampleSizeError("ANOVA needs at least two groups")
    for g in arrays:
        if g.size < 2:
            raise errors.SampleSizeError(
                f"every group needs >= 2 values, got {g.size}")
    total = np.concatenate(arrays)
    grand = float(total.mean())
    ss_between = float(sum(g.size * (float(g.mean()) - grand) ** 2
                           for g in arrays))
    ss_within = float(sum(((g - g.mean()) ** 2).sum() for g in arrays))
    if ss_within == 0.0:
        raise errors.ZeroVarianceError(
            "within-group variance is zero; F undefined")
    df_between = len(arrays) - 1
    df_within = int(total.size) - len(arrays)
    f_stat = (ss_between / df_between) / (ss_within / df_within)
    p_value = reg_inc_beta(df_within / (df_within + df_between * f_stat),
                           df_within / 2.0, df_between / 2.0)
    return AnovaReport(
        f_stat=f_stat, df_between=df_between, df_within=df_within,
        p_value=p_value,
        eta_sq=ss_between / (ss_between + ss_within),
        ss_between=ss_between, ss_within=ss_within)


def one_sample_ttest(sample, mu0: float) -> TTestReport:
    """Two-sided one-sample t-test of the mean against ``mu0``."""
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise errors.SampleSizeError(
            f"t-test needs >= 2 values, got {x.size}")
    n = int(x.size)
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise errors.ZeroVarianceError(
            "sample standard deviation is zero; t undefined")
    t_stat = (mean - mu0) / (sd / math.sqrt(n))
    df = n - 1
    p_value = reg_inc_beta(df / (df + t_stat * t_stat), df / 2.0, 0.5)
    return TTestReport(t_stat=t_stat, df=df, p_value=p_value)


# --------------------------------------------------------------------------
# table-level comparisons

def strategy_comparison(table, pairs=None, alpha: float = 0.05
                        ) -> list[ComparisonRecord]:
    """Per-angle ANOVAs on maximised objective values of strategy pairs."""
    pairs = tuple(pairs) if pairs is not None else DEFAULT_PAIRS
    records = []
    for angle in table.angles():
        for pair in pairs:
            groups = []
            for strategy in pair:
                values = table.c_values(angle, strategy)
                if not values:
                    raise errors.IncompleteTableError(
                        f"no rows for strategy {strategy!r} at angle {angle}")
                groups.append(values)
            report = one_way_anova(groups)
            records.append(ComparisonRecord(
                crossing_angle_deg=angle, strategies=tuple(pair),
                report=report, significant=report.p_value < alpha))
    return records


def bisector_normal_test(table, expected_gamma_deg: float = 90.0,
                         alpha: float = 0.05) -> list[GammaTestRecord]:
    """Per (angle, strategy) t-tests of orientations against the expected
    value; cells whose test is undefined are reported, not fatal."""
    records = []
    for angle in table.angles():
        for strategy in table.strategies():
            gammas = table.gamma_values(angle, strategy)
            if not gammas:
                continue
            try:
                report = one_sample_ttest(gammas, expected_gamma_deg)
            except (errors.SampleSizeError, errors.ZeroVarianceError) as exc:
                records.append(GammaTestRecord(
                    crossing_angle_deg=angle, strategy=strategy, report=None,
                    significant=None, error=f"{type(exc).__name__}: {exc}"))
                continue
            records.append(GammaTestRecord(
                crossing_angle_deg=angle, strategy=strategy, report=report,
                significant=report.p_value < alpha))
    return records


# --------------------------------------------------------------------------
# text rendering

def render_anova_table(records: list[ComparisonRecord]) -> str:
    """Angle rows by strategy pair: F(dfb,dfw), p (asterisk = significant)."""
    lines = [f"{'angle':>7}  {'strategies':<22} {'F':>12} {'p':>10} "
             f"{'eta^2':>8}"]
    for rec in records:
        r = rec.report
        star = "*" if rec.significant else ""
        lines.append(
            f"{rec.crossing_angle_deg:>6g}°  "
            f"{' vs '.join(rec.strategies):<22} "
            f"F({r.df_between},{r.df_within})={r.f_stat:<8.4g} "
            f"{r.p_value:>9.4g}{star} {r.eta_sq:>8.3g}")
    return "\n".join(lines)


def render_ttest_table(records: list[GammaTestRecord],
                       expected_gamma_deg: float = 90.0) -> str:
    """Angle rows by strategy columns: t(df), p (asterisk = significant)."""
    strategies = sorted({r.strategy for r in records})
    by_key = {(r.crossing_angle_deg, r.strategy): r for r in records}
    width = 24
    header = f"{'angle':>7}  " + "".join(f"{s:<{width}}" for s in strategies)
    lines = [f"orientation vs {expected_gamma_deg:g}°", header]
    for angle in sorted({r.crossing_angle_deg for r in records}):
        cells = []
        for s in strategies:
            rec = by_key.get((angle, s))
            if rec is None:
                cells.append(f"{'-':<{width}}")
            elif rec.report is None:
                cells.append(f"{'undefined':<{width}}")
            else:
                star = "*" if rec.significant else ""
                cells.append(f"t({rec.report.df})={rec.report.t_stat:.3f}, "
                             f"p={rec.report.p_value:.3g}{star}"
                             .ljust(width))
        lines.append(f"{angle:>6g}°  " + "".join(cells))
    return "\n".join(lines)
