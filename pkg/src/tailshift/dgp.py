"""Seeded synthetic data generators: AR(1), ARCH(1), regime switches, shifts.

Reproducibility contract
------------------------
All randomness flows through a counter-based Philox stream addressed by
``(seed, stream_index)``; every draw is a documented transform of that
uniform stream, in a fixed consumption order:

* uniforms: numpy ``Generator.random`` on the Philox bit stream;
* normals: Box-Muller pairs - for each pair of uniforms (u1, u2),
  r = sqrt(-2 ln(1 - u1)), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2),
  emitted in that order (the trailing sine draw is dropped for odd counts);
* gamma(shape >= 1): Marsaglia-Tsang squeeze - per round, a block of
  normals then a block of uniforms for the still-pending slots;
  shape < 1 uses the boost gamma(shape+1) * u^(1/shape);
* chi-square with integral df <= 32: sum of df squared normals (df t-draws
  consume df normals each); otherwise 2 * gamma(df / 2);
* student t: z / sqrt(chi2 / df), numerator normals drawn first.

A fixed (spec, seed) therefore reproduces the same series on any machine
with the same floating-point libm; within one platform results are
bit-identical run to run and independent of how many replications run in
parallel (each replication owns a substream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ar1_recursion, arch1_recursion
from .errors import InvalidInputError
from .series import TimeSeries

_TWO_PI = 2.0 * math.pi
_CHISQ_SUM_MAX_DF = 32


def make_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Philox generator for substream ``index`` of master ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seed=ss))


def sample_normal(rng: np.random.Generator, size: int | None = None):
    """Standard normal draws via the documented Box-Muller transform."""
    scalar = size is None
    n = 1 if scalar else int(size)
    m = (n + 1) // 2
    u1 = rng.random(m)
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(_TWO_PI * u2)
    z[1::2] = r * np.sin(_TWO_PI * u2)
    return float(z[0]) if scalar else z[:n]


def _sample_gamma(rng: np.random.Generator, shape: float, size: int) -> np.ndarray:
    """Marsaglia-Tsang gamma(shape, 1) draws."""
    if shape < 1.0:
        g = _sample_gamma(rng, shape + 1.0, size)
        u = rng.random(size)
        return g * np.power(u, 1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        z = sample_normal(rng, pending.size)
        u = rng.random(pending.size)
        v = (1.0 + c * z) ** 3
        with np.errstate(divide="ignore"):
            ok = (v > 0.0) & (np.log(u) < 0.5 * z * z + d - d * v + d * np.log(np.where(v > 0.0, v, 1.0)))
        out[pending[ok]] = d * v[ok]
        pending = pending[~ok]
    return out


def sample_student_t(df: float, rng: np.random.Generator, size: int | None = None):
    """Student-t draws as z / sqrt(chi2_df / df).

    Integral df up to 32 builds the chi-square as a sum of squared normals;
    larger or fractional df uses the gamma transform (a literal
    sum-of-squares would need df normals per draw).
    """
    if not df > 0:
        raise InvalidInputError(f"degrees of freedom must be positive, got {df}")
    scalar = size is None
    n = 1 if scalar else int(size)
    z = sample_normal(rng, n)
    if df == math.floor(df) and df <= _CHISQ_SUM_MAX_DF:
        k = int(df)
        comps = sample_normal(rng, n * k).reshape(n, k)
        chi2 = np.sum(comps * comps, axis=1)
    else:
        chi2 = 2.0 * _sample_gamma(rng, df / 2.0, n)
    t = z / np.sqrt(chi2 / df)
    return float(t[0]) if scalar else t


@dataclass(frozen=True)
class DgpSpec:
    """Simulation design for one synthetic series.

    ``schedule`` lists (fraction, new_param) pairs with strictly increasing
    fractions in (0, 1); the parameter switches after innovation index
    [n * fraction], i.e. innovation [n*f] still uses the old value and
    [n*f] + 1 the new one. For AR(1) the scheduled parameter is the
    t-innovation df, for ARCH(1) the lambda coefficient.
    """

    family: str                       # "ar1" | "arch1"
    n: int
    seed: int
    phi: float = 0.5
    beta: float = 1.0
    lam: float = 0.3
    innovation: str = "normal"        # "normal" | "student_t"
    df: float | None = None
    init: str = "stationary"          # "stationary" | "burnin"
    burn_in: int = 5000
    schedule: tuple[tuple[float, float], ...] = ()
    stream_index: int = field(default=0, compare=True)

    def __post_init__(self):
        if self.family not in ("ar1", "arch1"):
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.n < 1:
            raise InvalidInputError(f"series length must be >= 1, got {self.n}")
        if self.family == "ar1" and not abs(self.phi) < 1:
            raise InvalidInputError(f"need |phi| < 1, got {self.phi}")
        if self.family == "arch1":
            if not self.beta > 0:
                raise InvalidInputError(f"need beta > 0, got {self.beta}")
            if self.lam < 0:
                raise InvalidInputError(f"need lambda >= 0, got {self.lam}")
        if self.innovation not in ("normal", "student_t"):
            raise InvalidInputError(f"unknown innovation {self.innovation!r}")
        if self.innovation == "student_t" and (self.df is None or not self.df > 0):
            raise InvalidInputError(f"student_t innovations need df > 0, got {self.df}")
        if self.init not in ("stationary", "burnin"):
            raise InvalidInputError(f"unknown init {self.init!r}")
        if self.burn_in < 0:
            raise InvalidInputError(f"burn-in must be >= 0, got {self.burn_in}")
        fracs = [f for f, _ in self.schedule]
        if any(not (0.0 < f < 1.0) for f in fracs):
            raise InvalidInputError("schedule fractions must lie in (0, 1)")
        if any(b <= a for a, b in zip(fracs, fracs[1:])):
            raise InvalidInputError("schedule fractions must be strictly increasing")
        object.__setattr__(self, "schedule", tuple((float(f), float(v)) for f, v in self.schedule))

    def to_dict(self) -> dict:
        return {
            "family": self.family, "n": self.n, "seed": self.seed,
            "phi": self.phi, "beta": self.beta, "lam": self.lam,
            "innovation": self.innovation, "df": self.df,
            "init": self.init, "burn_in": self.burn_in,
            "schedule": [list(e) for e in self.schedule],
            "stream_index": self.stream_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        d = dict(d)
        d["schedule"] = tuple(tuple(e) for e in d.get("schedule", ()))
        return cls(**d)


def _frac_index(n: int, fraction: float) -> int:
    # integer part of n * fraction; epsilon absorbs 1/3-style float error
    return int(math.floor(n * fraction + 1e-9))


def _innovation_blocks(spec: DgpSpec, base_param: float, burn: int) -> list[tuple[int, float]]:
    """(count, parameter) blocks covering burn-in plus the n-1 recursion steps."""
    n_eps = burn + spec.n - 1
    bounds = [burn + _frac_index(spec.n, f) for f, _ in spec.schedule]
    params = [base_param] + [v for _, v in spec.schedule]
    blocks: list[tuple[int, float]] = []
    prev = 0
    for b, prm in zip(bounds + [n_eps], params):
        b = min(max(b, prev), n_eps)
        if b > prev:
            blocks.append((b - prev, prm))
        prev = b
    if prev < n_eps:
        blocks.append((n_eps - prev, params[-1]))
    return blocks


def _draw_innovations(spec: DgpSpec, rng: np.random.Generator,
                      burn: int) -> tuple[np.ndarray, np.ndarray]:
    """(eps, param_per_step) arrays in time order, burn-in first.

    The scheduled parameter is the innovation df for AR(1) (so the draws
    themselves change across blocks) and the lambda coefficient for ARCH(1)
    (the draws are homogeneous, the recursion coefficient changes).
    """
    if spec.family == "ar1":
        base = spec.df if spec.innovation == "student_t" else 0.0
    else:
        base = spec.lam
    blocks = _innovation_blocks(spec, base, burn)
    eps_parts = []
    par_parts = []
    for count, prm in blocks:
        if spec.innovation == "student_t":
            df = prm if spec.family == "ar1" else spec.df
            eps_parts.append(sample_student_t(df, rng, count))
        else:
            eps_parts.append(sample_normal(rng, count))
        par_parts.append(np.full(count, prm))
    if not eps_parts:
        return np.empty(0), np.empty(0)
    return np.concatenate(eps_parts), np.concatenate(par_parts)


def gen_ar1(spec: DgpSpec) -> TimeSeries:
    """AR(1) path X_{i+1} = phi X_i + eps_i.

    Stationary init draws X_1 ~ N(0, 1/(1-phi^2)) (normal innovations only -
    the t-innovation stationary law has no closed form, use burn-in);
    burn-in init starts at 0 and discards ``burn_in`` steps.
    """
    if spec.family != "ar1":
        raise InvalidInputError(f"gen_ar1 called with family {spec.family!r}")
    if spec.schedule and spec.innovation != "student_t":
        raise InvalidInputError("AR(1) regime schedules switch the t-innovation df; "
                                "use student_t innovations")
    rng = make_stream(spec.seed, spec.stream_index)
    if spec.init == "stationary":
        if spec.innovation != "normal":
            raise InvalidInputError("stationary init has no closed form for t innovations; "
                                    "use init='burnin'")
        burn = 0
        x0 = math.sqrt(1.0 / (1.0 - spec.phi * spec.phi)) * sample_normal(rng)
    else:
        burn = spec.burn_in
        x0 = 0.0
    eps, _ = _draw_innovations(spec, rng, burn)
    out = np.empty(burn + spec.n)
    ar1_recursion(x0, spec.phi, eps, out)
    return TimeSeries(out[burn:])


def gen_arch1(spec: DgpSpec) -> TimeSeries:
    """ARCH(1) path X_{i+1} = sqrt(beta + lambda X_i^2) eps_i, burn-in init."""
    if spec.family != "arch1":
        raise InvalidInputError(f"gen_arch1 called with family {spec.family!r}")
    if spec.init == "stationary":
        raise InvalidInputError("the ARCH(1) stationary law is not available in closed form; "
                                "use init='burnin'")
    rng = make_stream(spec.seed, spec.stream_index)
    burn = spec.burn_in
    eps, lam_per_step = _draw_innovations(spec, rng, burn)
    out = np.empty(burn + spec.n)
    arch1_recursion(0.0, spec.beta, np.ascontiguousarray(lam_per_step), eps, out)
    return TimeSeries(out[burn:])


def generate(spec: DgpSpec) -> TimeSeries:
    """Dispatch on the spec family."""
    return gen_ar1(spec) if spec.family == "ar1" else gen_arch1(spec)


def inject_location_shift(series: TimeSeries, at_fraction: float, magnitude: float) -> TimeSeries:
    """Add ``magnitude`` to every observation with index > [n * at_fraction]."""
    if not (0.0 < at_fraction < 1.0):
        raise InvalidInputError(f"shift fraction must be in (0, 1), got {at_fraction}")
    n = len(series)
    cut = _frac_index(n, at_fraction)
    vals = series.values.copy()
    vals[cut:] += magnitude
    return TimeSeries(vals, timestamps=series.timestamps)
