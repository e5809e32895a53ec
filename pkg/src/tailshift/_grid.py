"""Candidate-index construction for the multiple-change statistics.

The coarse grid is {(1 + k*delta)/2 : k integer} intersected with [0, 1].
``delta`` is carried as an exact Fraction so that grid fractions map to
lattice indices by exact integer arithmetic - floor(n * g) computed in
floats would drift by one step for fractions like 0.975 whose binary
representation sits just below the decimal value. Data statistic (lattice
size n) and limit functional (lattice size N) share this module, so both
sides of the test discretize identically.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import InvalidInputError


def as_fraction(delta) -> Fraction:
    """Exact rational form of a trim parameter given as str, float or Fraction."""
    if isinstance(delta, Fraction):
        f = delta
    elif isinstance(delta, str):
        f = Fraction(delta)
    else:
        # repr round-trip: 0.05 -> '0.05' -> 1/20
        f = Fraction(repr(float(delta)))
    if not (0 < f < Fraction(1, 2)):
        raise InvalidInputError(f"trim parameter must be in (0, 0.5), got {delta}")
    return f


def _floor_frac(n: int, frac: Fraction) -> int:
    return int(n * frac.numerator // frac.denominator)


def coarse_fractions(delta: Fraction) -> list[Fraction]:
    """Grid {(1 + k*delta)/2} within [0, 1], ascending."""
    out = []
    k = 0
    while True:
        g = (1 - k * delta) / 2
        if g < 0:
            break
        out.append(g)
        k += 1
    out = out[::-1]
    k = 1
    while True:
        g = (1 + k * delta) / 2
        if g > 1:
            break
        out.append(g)
        k += 1
    return out


def forward_candidates(count: int, delta: Fraction):
    """Lattice candidates of the forward statistic on a length-``count`` grid.

    Returns (b, a_lo, a_hi) index arrays: the coarse endpoint b = [count * g]
    for grid fractions g in [2*delta, 1 - delta], and for each the admissible
    fine split range a in [[count*delta], [count*(g - delta)]].
    """
    bs, alo, ahi = [], [], []
    a_min = _floor_frac(count, delta)
    for g in coarse_fractions(delta):
        if g < 2 * delta or g > 1 - delta:
            continue
        b = _floor_frac(count, g)
        a_hi = _floor_frac(count, g - delta)
        if a_hi < a_min or b < 1:
            continue
        bs.append(b)
        alo.append(max(a_min, 1))
        ahi.append(min(a_hi, b - 1))
    return (np.asarray(bs, dtype=np.int64), np.asarray(alo, dtype=np.int64),
            np.asarray(ahi, dtype=np.int64))


def backward_candidates(count: int, delta: Fraction):
    """Lattice candidates of the backward statistic (coarse start, fine end)."""
    cs, dlo, dhi = [], [], []
    d_max = _floor_frac(count, 1 - delta)
    for g in coarse_fractions(delta):
        if g < delta or g > 1 - 2 * delta:
            continue
        c = _floor_frac(count, g)
        d_lo = _floor_frac(count, g + delta)
        if d_lo > d_max or c < 1:
            continue
        cs.append(c)
        dlo.append(max(d_lo, c + 1))
        dhi.append(min(d_max, count - 1))
    return (np.asarray(cs, dtype=np.int64), np.asarray(dlo, dtype=np.int64),
            np.asarray(dhi, dtype=np.int64))


def full_forward_candidates(count: int, delta: Fraction):
    """Every admissible integer pair of the forward statistic.

    Admissibility is a >= [count*delta], b <= [count*(1-delta)],
    b - a >= [count*delta]; the coarse-grid candidate set is a subset, which
    is what makes grid-mode values a lower bound for full-mode values.
    """
    gap = max(_floor_frac(count, delta), 1)
    b_max = _floor_frac(count, 1 - delta)
    bs, alo, ahi = [], [], []
    for b in range(2 * gap, b_max + 1):
        bs.append(b)
        alo.append(gap)
        ahi.append(b - gap)
    return (np.asarray(bs, dtype=np.int64), np.asarray(alo, dtype=np.int64),
            np.asarray(ahi, dtype=np.int64))


def full_backward_candidates(count: int, delta: Fraction):
    gap = max(_floor_frac(count, delta), 1)
    d_max = _floor_frac(count, 1 - delta)
    cs, dlo, dhi = [], [], []
    for c in range(gap, d_max - gap + 1):
        cs.append(c)
        dlo.append(c + gap)
        dhi.append(d_max)
    return (np.asarray(cs, dtype=np.int64), np.asarray(dlo, dtype=np.int64),
            np.asarray(dhi, dtype=np.int64))
