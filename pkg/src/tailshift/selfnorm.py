"""Confidence intervals without standard-error estimation.

Two constructions, both avoiding the long-run variance:

* sectioning: split the sample into m equal contiguous sections, evaluate
  the estimator separately on each, and form the classical t interval from
  the m section estimates (pivot: Student t with m - 1 df);
* self-normalization: divide the centered full-sample estimate by the
  root of the weighted quadratic variation of the prefix-estimate path and
  compare against Monte Carlo quantiles of the Brownian pivot
  |W(1)| / sqrt(int_0^1 (W(t) - t W(1))^2 dt).

Lower-tail specifications are reduced to the upper tail by negation; the
point estimate and interval endpoints are sign-flipped (and swapped) back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateIntervalError, InvalidInputError, TableMismatchError
from .estimators import measure_estimate, measure_prefix_suffix
from .limitdist import CriticalValueTable
from .series import RiskSpec, TailSide, TimeSeries, complement_spec, default_i_min, to_upper_tail
from .tdist import student_t_quantile

DEFAULT_SECTIONS = 10


@dataclass(frozen=True)
class IntervalResult:
    """Point estimate with a confidence interval and method diagnostics.

    ``point`` is always the full-sample estimate. For sectioning the
    interval is centered at the mean of the section estimates, which for a
    nonlinear functional is not the full-sample estimate, so
    lo <= point <= hi is not guaranteed; lo <= center <= hi always holds.
    """

    point: float
    lo: float
    hi: float
    center: float
    method: str
    level: float
    measure: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hi < self.lo:
            raise InvalidInputError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def covers(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def _measure_of(spec: RiskSpec, measure: str | None) -> tuple[str, float | None]:
    if measure is None:
        measure = "ctm" if spec.beta is not None else "es"
    if measure == "ctm" and spec.beta is None:
        raise InvalidInputError("ctm intervals need a tail-moment exponent in the risk spec")
    return measure, spec.beta


def sectioning_interval(series: TimeSeries, spec: RiskSpec, m: int = DEFAULT_SECTIONS,
                        level: float = 0.95, measure: str | None = None) -> IntervalResult:
    """t interval from m per-section estimates (trailing remainder dropped).

    Sections are the first m * floor(n/m) observations split contiguously;
    equal lengths are required for the symmetric t pivot, so the remainder
    is never redistributed. Zero dispersion across sections raises
    `DegenerateIntervalError` carrying the center.
    """
    if m < 2:
        raise InvalidInputError(f"need at least 2 sections, got m={m}")
    if not (0.0 < level < 1.0):
        raise InvalidInputError(f"coverage level must be in (0, 1), got {level}")
    measure, beta = _measure_of(spec, measure)
    work, p = to_upper_tail(series, spec)
    u_spec = complement_spec(spec)
    n = len(work)
    need = m * (int(math.ceil(1.0 / (1.0 - p) - 1e-9)))
    if n < need:
        raise InvalidInputError(
            f"series length {n} cannot support {m} sections at level p={p}; need at least {need}"
        )
    seg_len = n // m
    vals = work.values
    sections = [vals[i * seg_len : (i + 1) * seg_len] for i in range(m)]
    ests = np.array([measure_estimate(s, p, measure, beta, u_spec.p_exact) for s in sections])
    center = float(np.mean(ests))
    s_dev = float(np.std(ests, ddof=1))
    point = float(measure_estimate(vals, p, measure, beta, u_spec.p_exact))
    sign = -1.0 if spec.side is TailSide.LOWER else 1.0
    if s_dev == 0.0:
        raise DegenerateIntervalError(
            "all section estimates are identical; the t pivot is degenerate",
            value=sign * center,
        )
    t_crit = student_t_quantile(0.5 * (1.0 + level), m - 1)
    half = t_crit * s_dev / math.sqrt(m)
    lo, hi = center - half, center + half
    if spec.side is TailSide.LOWER:
        point, center, lo, hi = -point, -center, -hi, -lo
        ests = -ests
    return IntervalResult(
        point=point, lo=lo, hi=hi, center=center, method="sectioning",
        level=level, measure=measure,
        diagnostics={
            "m": m, "section_length": seg_len, "dropped": n - m * seg_len,
            "section_estimates": ests.tolist(), "t_critical": t_crit,
            "section_sd": s_dev,
        },
    )


def selfnorm_interval(series: TimeSeries, spec: RiskSpec, level: float,
                      critvals: CriticalValueTable, i_min: int | None = None,
                      measure: str | None = None) -> IntervalResult:
    """Self-normalized interval: estimate +/- c * V_n.

    V_n is the root mean of (i/n)^2 (theta_hat_{1:i} - theta_hat_n)^2 over
    prefixes i >= i_min (shorter prefixes are skipped and the mean is taken
    over the included terms); c is the requested-level quantile of the
    absolute Brownian pivot, i.e. the (1+level)/2 two-sided point.
    """
    if not (0.0 < level < 1.0):
        raise InvalidInputError(f"coverage level must be in (0, 1), got {level}")
    if critvals.functional != "interval_pivot":
        raise TableMismatchError(
            f"self-normalized intervals need an 'interval_pivot' table, got {critvals.functional!r}"
        )
    measure, beta = _measure_of(spec, measure)
    work, p = to_upper_tail(series, spec)
    if i_min is None:
        i_min = default_i_min(p)
    arrays = measure_prefix_suffix(work, p, i_min=i_min, measure=measure, beta=beta)
    n = arrays.n
    included = n - arrays.i_min + 1
    v_n = math.sqrt(arrays.prefix_wc2[n] / included)
    point = arrays.center
    sign = -1.0 if spec.side is TailSide.LOWER else 1.0
    if v_n == 0.0:
        raise DegenerateIntervalError(
            "prefix-estimate path is constant; the self-normalizer is zero",
            value=sign * point,
        )
    c = critvals.quantile(level)
    lo, hi = point - c * v_n, point + c * v_n
    if spec.side is TailSide.LOWER:
        point, lo, hi = -point, -hi, -lo
    return IntervalResult(
        point=point, lo=lo, hi=hi, center=point, method="selfnorm",
        level=level, measure=measure,
        diagnostics={
            "v_n": v_n, "critical_value": c, "i_min": arrays.i_min,
            "skipped_prefixes": arrays.i_min - 1, "table_key": critvals.key(),
        },
    )
