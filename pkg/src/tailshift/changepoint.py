"""Retrospective change-point tests for tail risk measures.

Single change
-------------
The statistic is the supremum over split candidates k of

    t^2 (1-t)^2 (theta_{1:k} - theta_{k+1:n})^2
    -------------------------------------------------------------------
    n^-1 sum_{i<=k} (i/n)^2 (theta_{1:i} - theta_{1:k})^2
      + n^-1 sum_{i>k} ((n-i+1)/n)^2 (theta_{i:n} - theta_{k+1:n})^2

with t = k/n. The numerator is the squared CUSUM contrast of the
pre-split and post-split estimates; the denominator is the split quadratic
self-normalizer, so the unknown long-run scale cancels. The supremum is
taken over k in [n_min, n - n_min] because the plug-in estimator does not
exist on empty or ultra-short segments; the trim used is recorded in every
result.

Multiple changes
----------------
Forward and backward windowed versions of the same construction, scanned
over a coarse grid on one index (grid spacing delta/2) and all fine indices
on the other, then summed: sup C_f/D_f + sup C_b/D_b. This detects an
unknown, possibly multiple, number of changes at O(n) candidate cost
instead of O(n^2). No location is reported: the test is for the presence
of change, not its position.

The backward denominator's trailing weight uses the factor (n - d - 1)^2,
although symmetry with the forward form suggests (n - d + 1)^2; the
formula is implemented as displayed in its source and candidates where the
factor vanishes are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _grid
from ._kernels import inner_split_sums, multi_ratio_scan
from .errors import DegenerateStatisticError, InvalidInputError, TableMismatchError
from .estimators import measure_prefix_suffix, segment_matrix
from .limitdist import CriticalValueTable
from .series import RiskSpec, TimeSeries, default_i_min, default_n_min, to_upper_tail


@dataclass(frozen=True)
class TrimPolicy:
    """Minimum segment lengths: n_min for the outer split, i_min inside sums."""

    n_min: int
    i_min: int

    def __post_init__(self):
        if not (self.n_min >= self.i_min >= 1):
            raise InvalidInputError(f"need n_min >= i_min >= 1, got {self.n_min}, {self.i_min}")

    @classmethod
    def for_level(cls, p: float) -> "TrimPolicy":
        return cls(n_min=default_n_min(p), i_min=default_i_min(p))


@dataclass(frozen=True)
class SingleChangeTraces:
    """Per-candidate diagnostic paths of the single-change statistic."""

    candidates: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    ratio: np.ndarray
    cusum: np.ndarray
    ratio_argmax: int
    cusum_argmax: int


@dataclass(frozen=True)
class MultipleChangeTraces:
    """Per-candidate ratios of the forward and backward scans."""

    forward_coarse: np.ndarray
    forward_ratio: np.ndarray
    backward_coarse: np.ndarray
    backward_ratio: np.ndarray
    forward_sup: float
    backward_sup: float
    forward_argmax: tuple[int, int]
    backward_argmax: tuple[int, int]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_value: float
    level: float
    reject: bool
    location: int | None
    traces: object
    params: dict = field(default_factory=dict)


def _measure_of(spec: RiskSpec) -> tuple[str, float | None]:
    # VaR-only change testing is out of scope by design; beta selects CTM.
    if spec.beta is not None:
        return "ctm", spec.beta
    return "es", None


def single_change_statistic(series: TimeSeries, spec: RiskSpec,
                            trim: TrimPolicy | None = None):
    """(statistic, split argmax, traces) of the self-normalized CUSUM test.

    Candidates with an identically zero normalizer and zero contrast are
    skipped; a zero normalizer with nonzero contrast yields an infinite
    ratio (the split segments are internally constant but differ). If every
    candidate is skipped - a constant series - `DegenerateStatisticError`
    is raised. Ties in the argmax break toward the smallest index.
    """
    work, p = to_upper_tail(series, spec)
    measure, beta = _measure_of(spec)
    if trim is None:
        trim = TrimPolicy.for_level(p)
    n = len(work)
    if n < 2 * trim.n_min:
        raise InvalidInputError(f"series length {n} is below 2 * n_min = {2 * trim.n_min}")
    arrays = measure_prefix_suffix(work, p, i_min=trim.i_min, measure=measure, beta=beta)

    k = np.arange(trim.n_min, n - trim.n_min + 1)
    t = k / n
    pk = arrays.prefix[k]
    sk1 = arrays.suffix[k + 1]
    contrast = pk - sk1
    num = (t * (1.0 - t)) ** 2 * contrast**2
    cp = pk - arrays.center
    den1 = (arrays.prefix_wc2[k] - 2.0 * cp * arrays.prefix_wc[k] + cp * cp * arrays.prefix_w[k]) / n
    cs = sk1 - arrays.center
    den2 = (arrays.suffix_wc2[k + 1] - 2.0 * cs * arrays.suffix_wc[k + 1]
            + cs * cs * arrays.suffix_w[k + 1]) / n
    den = den1 + den2
    # guard tiny negative values produced by the centered-moment expansion
    den = np.where((den < 0.0) & (den > -1e-15), 0.0, den)

    ratio = np.full(k.size, np.nan)
    pos = den > 0.0
    ratio[pos] = num[pos] / den[pos]
    exploded = (~pos) & (num > 0.0)
    ratio[exploded] = np.inf
    if np.all(np.isnan(ratio)):
        raise DegenerateStatisticError(
            "self-normalizer is zero at every candidate (constant series)")
    best = int(np.nanargmax(ratio))
    cusum = math.sqrt(n) * t * (1.0 - t) * contrast
    traces = SingleChangeTraces(
        candidates=k, numerator=num, denominator=den, ratio=ratio, cusum=cusum,
        ratio_argmax=int(k[best]), cusum_argmax=int(k[int(np.argmax(np.abs(cusum)))]),
    )
    return float(ratio[best]), int(k[best]), traces


def single_change_test(series: TimeSeries, spec: RiskSpec, level: float,
                       critvals: CriticalValueTable,
                       trim: TrimPolicy | None = None) -> TestResult:
    """Reject when the single-change statistic exceeds the simulated quantile.

    The table must be a 'single_change' table whose trim fraction equals
    n_min / n for this sample; the estimated change location is the ratio
    argmax (the raw CUSUM argmax is available in the traces).
    """
    if not (0.0 < level < 1.0):
        raise InvalidInputError(f"significance level must be in (0, 1), got {level}")
    work_p = spec.p if spec.side.value == "upper" else 1.0 - spec.p
    if trim is None:
        trim = TrimPolicy.for_level(work_p)
    n = len(series)
    if critvals.functional != "single_change":
        raise TableMismatchError(
            f"single-change tests need a 'single_change' table, got {critvals.functional!r}")
    want = trim.n_min / n
    have = critvals.param("trim")
    if have != want:
        raise TableMismatchError(
            f"table trim fraction {have} does not match n_min/n = {want}; "
            f"build the table with trim={want!r}")
    statistic, argmax_k, traces = single_change_statistic(series, spec, trim)
    cv = critvals.quantile(1.0 - level)
    return TestResult(
        statistic=statistic, critical_value=cv, level=level,
        reject=bool(statistic > cv), location=argmax_k, traces=traces,
        params={"p": spec.p, "side": spec.side.value, "beta": spec.beta,
                "n": n, "n_min": trim.n_min, "i_min": trim.i_min,
                "trim_fraction": want, "table": critvals.key()},
    )


def _scan(values: np.ndarray, p: float, measure: str, beta, i_min: int,
          fwd_idx, bwd_idx):
    n = values.size
    M = segment_matrix(values, p, measure=measure, beta=beta)
    fwd_inner, bwd_inner = inner_split_sums(M, n, i_min)
    b_arr, a_lo, a_hi = fwd_idx
    c_arr, d_lo, d_hi = bwd_idx
    fwd_ratio = np.full((b_arr.size, n + 2), np.nan)
    bwd_ratio = np.full((c_arr.size, n + 2), np.nan)
    multi_ratio_scan(M, fwd_inner, bwd_inner, n, i_min,
                     b_arr, a_lo, a_hi, c_arr, d_lo, d_hi, fwd_ratio, bwd_ratio)
    return fwd_ratio, bwd_ratio


def _sup_of(ratio: np.ndarray, coarse: np.ndarray) -> tuple[float, tuple[int, int]]:
    if ratio.size == 0 or np.all(np.isnan(ratio)):
        raise DegenerateStatisticError("every candidate denominator vanished")
    flat = int(np.nanargmax(ratio))
    ci, fine = divmod(flat, ratio.shape[1])
    return float(ratio[ci, fine]), (int(coarse[ci]), int(fine))


_FULL_MODE_N_LIMIT = 600


def multiple_change_statistic(series: TimeSeries, spec: RiskSpec, delta=0.05,
                              mode: str = "grid", i_min: int | None = None):
    """(statistic, traces) of the unsupervised multiple-change test.

    Grid mode scans one index over the coarse grid and the other over all
    admissible integers (O(n / delta) candidates); full mode scans every
    admissible pair and is O(n^2) candidates with O(n) work each, so it is
    capped at n = 600 and intended for verification. The grid candidate set
    is a subset of the full one, hence grid value <= full value.
    """
    work, p = to_upper_tail(series, spec)
    measure, beta = _measure_of(spec)
    if i_min is None:
        i_min = default_i_min(p)
    frac = _grid.as_fraction(delta)
    n = len(work)
    if n * frac < 2 * i_min:
        raise InvalidInputError(
            f"need n * delta >= 2 * i_min for estimable windows; "
            f"got n={n}, delta={float(frac)}, i_min={i_min}")
    if mode == "grid":
        fwd_idx = _grid.forward_candidates(n, frac)
        bwd_idx = _grid.backward_candidates(n, frac)
    elif mode == "full":
        if n > _FULL_MODE_N_LIMIT:
            raise InvalidInputError(
                f"full mode is O(n^3); capped at n = {_FULL_MODE_N_LIMIT}, got {n}")
        fwd_idx = _grid.full_forward_candidates(n, frac)
        bwd_idx = _grid.full_backward_candidates(n, frac)
    else:
        raise InvalidInputError(f"unknown mode {mode!r}; expected 'grid' or 'full'")
    if fwd_idx[0].size == 0 or bwd_idx[0].size == 0:
        raise InvalidInputError(f"delta={float(frac)} leaves no admissible candidates at n={n}")
    fwd_ratio, bwd_ratio = _scan(work.values, p, measure, beta, i_min, fwd_idx, bwd_idx)
    fwd_sup, fwd_arg = _sup_of(fwd_ratio, fwd_idx[0])
    bwd_sup, bwd_arg = _sup_of(bwd_ratio, bwd_idx[0])
    traces = MultipleChangeTraces(
        forward_coarse=fwd_idx[0], forward_ratio=fwd_ratio,
        backward_coarse=bwd_idx[0], backward_ratio=bwd_ratio,
        forward_sup=fwd_sup, backward_sup=bwd_sup,
        forward_argmax=(fwd_arg[1], fwd_arg[0]), backward_argmax=(bwd_arg[0], bwd_arg[1]),
    )
    return fwd_sup + bwd_sup, traces


def multiple_change_test(series: TimeSeries, spec: RiskSpec, level: float,
                         critvals: CriticalValueTable, delta=0.05,
                         i_min: int | None = None) -> TestResult:
    """Reject when the grid statistic exceeds the simulated quantile.

    The table must be a 'multiple_change' table built at exactly this delta;
    a mismatch is a hard error rather than a silent level distortion. No
    change location is reported - the test is unsupervised in the number of
    changes and detects presence only.
    """
    if not (0.0 < level < 1.0):
        raise InvalidInputError(f"significance level must be in (0, 1), got {level}")
    if critvals.functional != "multiple_change":
        raise TableMismatchError(
            f"multiple-change tests need a 'multiple_change' table, got {critvals.functional!r}")
    frac = _grid.as_fraction(delta)
    if critvals.param("delta") != float(frac):
        raise TableMismatchError(
            f"table delta {critvals.param('delta')} does not match requested {float(frac)}")
    statistic, traces = multiple_change_statistic(series, spec, delta=delta, i_min=i_min)
    cv = critvals.quantile(1.0 - level)
    work_p = spec.p if spec.side.value == "upper" else 1.0 - spec.p
    return TestResult(
        statistic=statistic, critical_value=cv, level=level,
        reject=bool(statistic > cv), location=None, traces=traces,
        params={"p": spec.p, "side": spec.side.value, "beta": spec.beta,
                "n": len(series), "delta": float(frac),
                "i_min": i_min if i_min is not None else default_i_min(work_p),
                "table": critvals.key()},
    )
