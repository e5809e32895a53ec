"""Core data types: time series container, risk-measure specification, segments.

Conventions used throughout the package:

* observation indices are 1-based in every documented formula, matching the
  summation bounds used in the statistics; array code converts internally.
* lower-tail analysis is always reduced to the upper tail by negating the
  series and complementing the probability level, so there is exactly one
  tested code path for tail logic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError


class TailSide(Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class TimeSeries:
    """Ordered, finite real observations with optional date labels.

    Parameters
    ----------
    values : array-like of float
        The observations. Must be non-empty and free of NaN/inf - inputs
        with missing values are rejected rather than silently dropped,
        because dropping changes the sample size and every statistic with it.
    timestamps : tuple of str, optional
        One opaque label per observation (ISO-style dates sort correctly).
        Must be strictly increasing under string comparison.
    """

    values: np.ndarray
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidInputError(f"values must be one-dimensional, got shape {arr.shape}")
        if arr.size < 1:
            raise InvalidInputError("series must contain at least one observation")
        if not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise InvalidInputError(
                f"non-finite value at position {bad + 1}; NaN/inf inputs are rejected, not dropped"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.timestamps is not None:
            ts = tuple(str(t) for t in self.timestamps)
            if len(ts) != arr.size:
                raise InvalidInputError(
                    f"timestamps length {len(ts)} does not match values length {arr.size}"
                )
            for a, b in zip(ts, ts[1:]):
                if not a < b:
                    raise InvalidInputError(f"timestamps must be strictly increasing, got {a!r} >= {b!r}")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return int(self.values.size)

    def label(self, i: int) -> str:
        """Label for 1-based observation index ``i`` (falls back to the index)."""
        if self.timestamps is not None:
            return self.timestamps[i - 1]
        return str(i)


@dataclass(frozen=True)
class RiskSpec:
    """Which tail functional to estimate.

    Parameters
    ----------
    p : float
        Probability level in (0, 1).
    side : TailSide
        Which tail the level refers to. ``LOWER`` is handled by negation.
    beta : float, optional
        If given, the conditional tail moment exponent (beta = 1 recovers
        expected shortfall). Must be positive.
    p_exact : Fraction, optional
        Exact rational value of ``p`` when it originated from a decimal
        string (the CLI supplies this); used for exact order-statistic rank
        arithmetic at boundaries like p = 0.9, n = 10.
    """

    p: float
    side: TailSide = TailSide.UPPER
    beta: float | None = None
    p_exact: Fraction | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise InvalidInputError(f"probability level must be in (0, 1), got {self.p}")
        if self.beta is not None and not self.beta > 0:
            raise InvalidInputError(f"tail-moment exponent must be positive, got {self.beta}")
        if self.p_exact is not None and not (0 < self.p_exact < 1):
            raise InvalidInputError(f"exact probability must be in (0, 1), got {self.p_exact}")


@dataclass(frozen=True)
class SegmentRef:
    """Inclusive 1-based index range ``[l, m]`` of a series segment."""

    l: int
    m: int

    def __post_init__(self):
        if not (1 <= self.l <= self.m):
            raise InvalidInputError(f"need 1 <= l <= m, got l={self.l}, m={self.m}")

    def __len__(self) -> int:
        return self.m - self.l + 1


def to_upper_tail(series: TimeSeries, spec: RiskSpec) -> tuple[TimeSeries, float]:
    """Reduce a risk specification to its upper-tail equivalent.

    For an upper-tail spec the series is returned unchanged with
    ``effective_p = p``. For a lower-tail spec the series is negated and
    ``effective_p = 1 - p``: the lower-tail functional of X at level p equals
    minus the upper-tail functional of -X at level 1 - p, so callers
    sign-flip point estimates (and swap interval endpoints) on the way back.
    Test statistics are unaffected because they are even in the estimates.
    """
    if spec.side is TailSide.UPPER:
        return series, spec.p
    negated = TimeSeries(-series.values, timestamps=series.timestamps)
    return negated, 1.0 - spec.p


def complement_spec(spec: RiskSpec) -> RiskSpec:
    """Upper-tail spec equivalent to ``spec`` after `to_upper_tail` negation."""
    if spec.side is TailSide.UPPER:
        return spec
    p_exact = 1 - spec.p_exact if spec.p_exact is not None else None
    return RiskSpec(p=1.0 - spec.p, side=TailSide.UPPER, beta=spec.beta, p_exact=p_exact)


def log_returns(prices: TimeSeries) -> TimeSeries:
    """Log returns r_i = ln(P_{i+1} / P_i); output is one shorter than input.

    Each return keeps the label of its period end. Non-positive prices are
    rejected.
    """
    vals = prices.values
    if vals.size < 2:
        raise InvalidInputError("need at least two prices to form returns")
    if np.any(vals <= 0):
        bad = int(np.flatnonzero(vals <= 0)[0])
        raise InvalidInputError(f"non-positive price {vals[bad]} at position {bad + 1}")
    rets = np.diff(np.log(vals))
    ts = prices.timestamps[1:] if prices.timestamps is not None else None
    return TimeSeries(rets, timestamps=ts)


def default_i_min(p: float) -> int:
    """Smallest segment length given estimator support: ceil(1/(1-p)) + 1.

    Guarantees at least two expected exceedances per segment. The small
    epsilon guards against 1/(1-p) landing just above an integer in floating
    point (e.g. p = 0.9 gives 10.000000000000002).
    """
    return int(math.ceil(1.0 / (1.0 - p) - 1e-9)) + 1


def default_n_min(p: float) -> int:
    """Default outer-split trim for the single change-point statistic."""
    return max(default_i_min(p), 8)
