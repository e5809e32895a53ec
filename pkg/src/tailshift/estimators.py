"""Nonparametric tail-risk estimators on full samples and segments.

The plug-in estimators are

    var(p)  = inf{x : F_hat(x) >= p}                (the ceil(len*p)-th order statistic)
    es(p)   = (1/(1-p)) (1/len) sum x_i 1{x_i >= var(p)}
    ctm(p)  = (1/(1-p)) (1/len) sum x_i^beta 1{x_i >= var(p)}

The indicator is tie-inclusive exactly as written: every observation equal
to the estimated quantile is counted. For a constant series this makes
es(p) = c * count/(len*(1-p)) rather than c - that is the estimator's
definition, not a bug, and ties are null events for continuous data.

Exceedance sums use exact compensated summation (`math.fsum`) in the direct
estimators; the fast Fenwick-tree backends accumulate in tree order and are
held to the 1e-9 relative cross-backend contract instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._kernels import allpairs_segment_matrix, segment_tail_path
from .errors import InvalidInputError
from .series import SegmentRef, TimeSeries, default_i_min

_MEASURES = ("es", "ctm", "var")


def _as_values(segment) -> np.ndarray:
    if isinstance(segment, TimeSeries):
        return segment.values
    arr = np.asarray(segment, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"segment must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError("segment is empty")
    if not np.isfinite(arr).all():
        raise InvalidInputError("segment contains non-finite values")
    return arr


def _check_p(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise InvalidInputError(f"probability level must be in (0, 1), got {p}")


def var_rank(length: int, p: float, p_exact: Fraction | None = None) -> int:
    """1-based order-statistic rank ceil(length * p), clipped to [1, length].

    With ``p_exact`` the ceiling is taken in exact integer arithmetic, so
    boundary cases like p = 9/10, length = 10 cannot round up spuriously.
    The float path subtracts 1e-12 before the ceiling for the same reason.
    """
    if p_exact is not None:
        k = -((-length * p_exact.numerator) // p_exact.denominator)
    else:
        k = math.ceil(length * p - 1e-12)
    return min(max(int(k), 1), length)


def empirical_cdf(segment, x: float) -> float:
    """Sample distribution function: #{i : X_i <= x} / length."""
    vals = _as_values(segment)
    return float(np.count_nonzero(vals <= x)) / vals.size


def _tail_cut(vals: np.ndarray, p: float, p_exact: Fraction | None):
    """Sorted values, quantile value, and start of the tie-inclusive tail."""
    sv = np.sort(vals)
    k = var_rank(sv.size, p, p_exact)
    q = sv[k - 1]
    g = int(np.searchsorted(sv, q, side="left"))
    return sv, float(q), g


def var_estimate(segment, p: float, p_exact: Fraction | None = None) -> float:
    """Empirical quantile inf{x : F_hat(x) >= p}."""
    vals = _as_values(segment)
    _check_p(p)
    _, q, _ = _tail_cut(vals, p, p_exact)
    return q


def es_estimate(segment, p: float, p_exact: Fraction | None = None) -> float:
    """Tail-average estimator with tie-inclusive exceedance indicator."""
    vals = _as_values(segment)
    _check_p(p)
    sv, _, g = _tail_cut(vals, p, p_exact)
    tail_sum = math.fsum(sv[g:])
    return tail_sum / ((1.0 - p) * sv.size)


def ctm_estimate(segment, p: float, beta: float, p_exact: Fraction | None = None) -> float:
    """Conditional-tail-moment analogue: exceedance sum of x^beta.

    beta = 1 reduces exactly to `es_estimate`. Fractional beta requires
    non-negative data (negative base with fractional exponent is rejected).
    """
    vals = _as_values(segment)
    _check_p(p)
    if not beta > 0:
        raise InvalidInputError(f"tail-moment exponent must be positive, got {beta}")
    if beta != math.floor(beta) and np.any(vals < 0):
        raise InvalidInputError("fractional exponent requires non-negative segment values")
    sv, _, g = _tail_cut(vals, p, p_exact)
    tail_sum = math.fsum(np.power(sv[g:], beta))
    return tail_sum / ((1.0 - p) * sv.size)


def _measure_weights(vals: np.ndarray, measure: str, beta: float | None) -> tuple[np.ndarray, int]:
    """(weight array, kernel kind) for a measure name."""
    if measure == "es":
        return vals, 0
    if measure == "ctm":
        if beta is None or not beta > 0:
            raise InvalidInputError(f"ctm needs a positive exponent, got {beta}")
        if beta != math.floor(beta) and np.any(vals < 0):
            raise InvalidInputError("fractional exponent requires non-negative values")
        return np.power(vals, beta), 0
    if measure == "var":
        return vals, 1
    raise InvalidInputError(f"unknown measure {measure!r}; expected one of {_MEASURES}")


def measure_estimate(segment, p: float, measure: str = "es", beta: float | None = None,
                     p_exact: Fraction | None = None) -> float:
    """Dispatch to var/es/ctm by name (shared by intervals and the CLI)."""
    if measure == "es":
        return es_estimate(segment, p, p_exact)
    if measure == "var":
        return var_estimate(segment, p, p_exact)
    if measure == "ctm":
        return ctm_estimate(segment, p, beta, p_exact)
    raise InvalidInputError(f"unknown measure {measure!r}; expected one of {_MEASURES}")


def _rank_arrays(vals: np.ndarray):
    """Stable rank of each observation plus tie-group starts in rank space."""
    order = np.argsort(vals, kind="stable")
    ranks = np.empty(vals.size, dtype=np.int64)
    ranks[order] = np.arange(vals.size, dtype=np.int64)
    sorted_vals = np.ascontiguousarray(vals[order])
    new_group = np.ones(vals.size, dtype=bool)
    new_group[1:] = sorted_vals[1:] != sorted_vals[:-1]
    starts = np.flatnonzero(new_group)
    group_lo = starts[np.cumsum(new_group) - 1].astype(np.int64)
    return ranks, sorted_vals, group_lo


class TailSumIndex:
    """Incremental order-statistic index over a fixed value universe.

    Built from a series; values are then inserted one by one (each value must
    belong to the series, duplicates up to their multiplicity). Maintains two
    Fenwick trees over rank space - counts and value sums - so `insert` and
    `query` are both O(log n).
    """

    def __init__(self, series):
        vals = _as_values(series)
        self._sorted = np.sort(vals)
        self._n = int(vals.size)
        size = 1
        while size < self._n:
            size <<= 1
        self._size = size
        self._cnt = [0] * (size + 1)
        self._wsum = [0.0] * (size + 1)
        self._inserted = 0
        self._first: dict[float, int] = {}
        self._gsize: dict[float, int] = {}
        for i, v in enumerate(self._sorted.tolist()):
            if v not in self._first:
                self._first[v] = i
                self._gsize[v] = 1
            else:
                self._gsize[v] += 1
        self._cursor: dict[float, int] = {}

    def __len__(self) -> int:
        return self._inserted

    def insert(self, value: float) -> None:
        v = float(value)
        base = self._first.get(v)
        if base is None:
            raise InvalidInputError(f"value {v} is not part of the indexed universe")
        slot = self._cursor.get(v, base)
        if slot >= base + self._gsize[v]:
            raise InvalidInputError(f"all {self._gsize[v]} copies of {v} already inserted")
        self._cursor[v] = slot + 1
        i = slot + 1
        while i <= self._size:
            self._cnt[i] += 1
            self._wsum[i] += v
            i += i & (-i)
        self._inserted += 1

    def _prefix(self, pos: int) -> tuple[int, float]:
        c, s = 0, 0.0
        i = pos
        while i > 0:
            c += self._cnt[i]
            s += self._wsum[i]
            i -= i & (-i)
        return c, s

    def query(self, p: float, p_exact: Fraction | None = None) -> tuple[float, float, int]:
        """(quantile, sum of values >= quantile, count >= quantile) of the inserted multiset."""
        _check_p(p)
        if self._inserted == 0:
            raise InvalidInputError("query on empty index")
        k = var_rank(self._inserted, p, p_exact)
        pos, rem = 0, k
        bit = self._size
        while bit > 0:
            nxt = pos + bit
            if nxt <= self._size and self._cnt[nxt] < rem:
                rem -= self._cnt[nxt]
                pos = nxt
            bit >>= 1
        q = float(self._sorted[pos])
        g = self._first[q]
        c_below, s_below = self._prefix(g)
        c_all, s_all = self._prefix(self._size)
        return q, s_all - s_below, c_all - c_below


def build_tail_index(series) -> TailSumIndex:
    """Empty `TailSumIndex` whose universe is the series values."""
    return TailSumIndex(series)


@dataclass(frozen=True)
class EsPrefixArrays:
    """Measure estimates on every prefix [1..i] and suffix [i..n].

    Arrays are 1-based (index 0 unused); entries whose segment is shorter
    than ``i_min`` are NaN - absent, not zero. The cumulative moments are the
    running sums sum_j (j/n)^2 {1, c_j, c_j^2} over valid prefixes (and the
    mirrored ((n-j+1)/n)^2 suffix sums), where c_j is the estimate minus
    ``center`` (the full-sample estimate). Centering keeps the quadratic
    self-normalizer expansions well conditioned; the uncentered sums are
    recoverable exactly in exact arithmetic.
    """

    n: int
    p: float
    i_min: int
    measure: str
    prefix: np.ndarray
    suffix: np.ndarray
    center: float
    prefix_w: np.ndarray
    prefix_wc: np.ndarray
    prefix_wc2: np.ndarray
    suffix_w: np.ndarray
    suffix_wc: np.ndarray
    suffix_wc2: np.ndarray


def _prefix_path(vals: np.ndarray, p: float, measure: str, beta: float | None) -> np.ndarray:
    weights, kind = _measure_weights(vals, measure, beta)
    ranks, sorted_vals, group_lo = _rank_arrays(vals)
    out = np.empty(vals.size, dtype=np.float64)
    segment_tail_path(np.ascontiguousarray(weights), ranks, sorted_vals, group_lo,
                      float(p), kind, out)
    return out


def measure_prefix_suffix(series, p: float, i_min: int | None = None,
                          measure: str = "es", beta: float | None = None) -> EsPrefixArrays:
    """Prefix/suffix estimate arrays plus cumulative moments, O(n log n) total."""
    vals = _as_values(series)
    _check_p(p)
    n = int(vals.size)
    if i_min is None:
        i_min = default_i_min(p)
    if i_min < 1:
        raise InvalidInputError(f"i_min must be >= 1, got {i_min}")
    if n < i_min:
        raise InvalidInputError(f"series length {n} is below the minimum segment length {i_min}")

    fwd = _prefix_path(vals, p, measure, beta)
    rev = _prefix_path(vals[::-1].copy(), p, measure, beta)

    prefix = np.full(n + 1, np.nan)
    prefix[1:] = fwd
    prefix[1:i_min] = np.nan
    suffix = np.full(n + 2, np.nan)
    suffix[1 : n + 1] = rev[::-1]
    suffix[n - i_min + 2 : n + 1] = np.nan

    center = float(prefix[n])
    idx = np.arange(1, n + 1, dtype=np.float64)

    w = (idx / n) ** 2
    c = prefix[1:] - center
    valid = ~np.isnan(c)
    wv = np.where(valid, w, 0.0)
    cv = np.where(valid, c, 0.0)
    prefix_w = np.concatenate(([0.0], np.cumsum(wv)))
    prefix_wc = np.concatenate(([0.0], np.cumsum(wv * cv)))
    prefix_wc2 = np.concatenate(([0.0], np.cumsum(wv * cv * cv)))

    ws = ((n - idx + 1) / n) ** 2
    cs = suffix[1 : n + 1] - center
    valid_s = ~np.isnan(cs)
    wsv = np.where(valid_s, ws, 0.0)
    csv = np.where(valid_s, cs, 0.0)
    suffix_w = np.zeros(n + 2)
    suffix_wc = np.zeros(n + 2)
    suffix_wc2 = np.zeros(n + 2)
    suffix_w[1 : n + 1] = np.cumsum(wsv[::-1])[::-1]
    suffix_wc[1 : n + 1] = np.cumsum((wsv * csv)[::-1])[::-1]
    suffix_wc2[1 : n + 1] = np.cumsum((wsv * csv * csv)[::-1])[::-1]

    for a in (prefix, suffix, prefix_w, prefix_wc, prefix_wc2, suffix_w, suffix_wc, suffix_wc2):
        a.setflags(write=False)
    return EsPrefixArrays(
        n=n, p=float(p), i_min=int(i_min), measure=measure,
        prefix=prefix, suffix=suffix, center=center,
        prefix_w=prefix_w, prefix_wc=prefix_wc, prefix_wc2=prefix_wc2,
        suffix_w=suffix_w, suffix_wc=suffix_wc, suffix_wc2=suffix_wc2,
    )


def es_prefix_suffix(series, p: float, i_min: int | None = None) -> EsPrefixArrays:
    """Expected-shortfall prefix/suffix arrays (see `measure_prefix_suffix`)."""
    return measure_prefix_suffix(series, p, i_min=i_min, measure="es")


_MATRIX_N_LIMIT = 4000


def segment_matrix(series, p: float, measure: str = "es", beta: float | None = None) -> np.ndarray:
    """All-pairs segment estimates: out[l, m] for 1 <= l <= m <= n.

    O(n^2 log n) time and O(n^2) memory, so capped at n = 4000 (128 MB);
    the multiple-change statistic and the offline segment backend share it.
    """
    vals = _as_values(series)
    _check_p(p)
    n = int(vals.size)
    if n > _MATRIX_N_LIMIT:
        raise InvalidInputError(
            f"all-pairs segment table needs O(n^2) memory; n={n} exceeds the {_MATRIX_N_LIMIT} cap"
        )
    weights, kind = _measure_weights(vals, measure, beta)
    ranks, sorted_vals, group_lo = _rank_arrays(vals)
    out = np.full((n + 2, n + 2), np.nan)
    allpairs_segment_matrix(np.ascontiguousarray(weights), ranks, sorted_vals, group_lo,
                            float(p), kind, out)
    return out


class SegmentEsTable:
    """Offline backend answering any segment-ES query in O(1) after O(n^2 log n) build."""

    def __init__(self, series, p: float):
        vals = _as_values(series)
        self.n = int(vals.size)
        self.p = float(p)
        self._matrix = segment_matrix(vals, p, measure="es")

    def value(self, seg: SegmentRef) -> float:
        if seg.m > self.n:
            raise InvalidInputError(f"segment [{seg.l}, {seg.m}] exceeds series length {self.n}")
        return float(self._matrix[seg.l, seg.m])


def segment_es(series, seg: SegmentRef, p: float, backend: str = "naive",
               table: SegmentEsTable | None = None) -> float:
    """ES on the segment [seg.l, seg.m].

    backend="naive" extracts and sorts the segment (O(len log len));
    backend="indexed" uses an offline all-pairs table (built on first use,
    or pass a prebuilt one via ``table`` to amortize). The two backends
    agree within 1e-9 relative.
    """
    vals = _as_values(series)
    if seg.m > vals.size:
        raise InvalidInputError(f"segment [{seg.l}, {seg.m}] exceeds series length {vals.size}")
    if backend == "naive":
        return es_estimate(vals[seg.l - 1 : seg.m], p)
    if backend == "indexed":
        if table is None:
            table = SegmentEsTable(vals, p)
        return table.value(seg)
    raise InvalidInputError(f"unknown backend {backend!r}; expected 'naive' or 'indexed'")
