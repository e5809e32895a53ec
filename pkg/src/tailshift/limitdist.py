"""Monte Carlo simulation of the pivotal limit distributions.

Three functionals of standard Brownian motion supply every critical value
used by the inference modules:

* ``interval_pivot``: |W(1)| / sqrt(int_0^1 (W(t) - t W(1))^2 dt), the
  two-sided pivot behind the self-normalized confidence interval;
* ``single_change``: sup_t of the squared bridge over the split quadratic
  self-normalizer, the null limit of the single change-point statistic;
* ``multiple_change``: forward plus backward supremum of the windowed
  bridge ratios over the coarse grid, the null limit of the
  multiple change-point statistic (parameter ``delta``).

Paths are built from ``n_steps`` scaled standard normals,
W(k/N) = N^(-1/2) * sum_{j<=k} Z_j, each path from its own counter-based
substream (master seed + path index), so tables are bit-reproducible for a
fixed key regardless of chunking. Integrals are left-endpoint Riemann sums
with step 1/N, matching the discretization of the data-side statistics.

Tables are cached on disk as self-describing JSON and looked up by exact
key (functional, params, steps, paths, seed); a lookup never silently
falls back to a mismatched table.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import _grid
from ._kernels import multi_limit_scan
from .dgp import make_stream, sample_normal
from .errors import DegenerateStatisticError, InvalidInputError, MissingTableError, TableMismatchError

FUNCTIONALS = ("interval_pivot", "single_change", "multiple_change")
STANDARD_QS = (0.5, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995)
DEFAULT_STEPS = 5000
DEFAULT_PATHS = 10000
DEFAULT_TRIM = 0.02
DEFAULT_DELTA = 0.05
CACHE_ENV = "TAILSHIFT_CACHE_DIR"

_PATH_CHUNK = 128


@dataclass(frozen=True)
class BrownianPath:
    """Discretized Brownian path W(k/N), k = 0..N, with seed provenance."""

    steps: np.ndarray
    seed: int | None = None
    index: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.steps, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidInputError("path needs at least two lattice points")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "steps", arr)

    @property
    def n_steps(self) -> int:
        return self.steps.size - 1


def simulate_path(n_steps: int, rng: np.random.Generator,
                  seed: int | None = None, index: int | None = None) -> BrownianPath:
    """One path of scaled partial sums of ``n_steps`` standard normals."""
    if n_steps < 10:
        raise InvalidInputError(f"need at least 10 steps, got {n_steps}")
    z = sample_normal(rng, n_steps)
    w = np.empty(n_steps + 1)
    w[0] = 0.0
    np.cumsum(z, out=w[1:])
    w[1:] /= math.sqrt(n_steps)
    return BrownianPath(w, seed=seed, index=index)


# -- functional evaluation ---------------------------------------------------

def _pivot_batch(W: np.ndarray) -> np.ndarray:
    """interval_pivot on a (B, N+1) batch of paths."""
    N = W.shape[1] - 1
    k = np.arange(N, dtype=np.float64)
    bridge = W[:, :N] - (k / N) * W[:, N:]
    den2 = np.sum(bridge * bridge, axis=1) / N
    out = np.full(W.shape[0], np.nan)
    ok = den2 > 0.0
    out[ok] = np.abs(W[ok, N]) / np.sqrt(den2[ok])
    return out


def _single_change_batch(W: np.ndarray, k_lo: int, k_hi: int) -> np.ndarray:
    """single_change functional on a (B, N+1) batch, sup over k in [k_lo, k_hi]."""
    B, Np1 = W.shape
    N = Np1 - 1
    j = np.arange(Np1, dtype=np.float64)
    cW2 = np.zeros((B, Np1 + 1))
    cjW = np.zeros((B, Np1 + 1))
    np.cumsum(W * W, axis=1, out=cW2[:, 1:])
    np.cumsum(j * W, axis=1, out=cjW[:, 1:])
    cj2 = np.concatenate(([0.0], np.cumsum(j * j)))

    ks = np.arange(k_lo, k_hi + 1)
    fk = ks.astype(np.float64)
    Wk = W[:, ks]
    WN = W[:, N:]
    num = (Wk - (fk / N) * WN) ** 2

    g1 = Wk / fk
    i1 = (cW2[:, ks] - 2.0 * g1 * cjW[:, ks] + g1 * g1 * cj2[ks]) / N

    V = WN - W
    cV2 = np.zeros((B, Np1 + 1))
    cmV = np.zeros((B, Np1 + 1))
    np.cumsum(V * V, axis=1, out=cV2[:, 1:])
    np.cumsum((N - j) * V, axis=1, out=cmV[:, 1:])
    cm2 = np.concatenate(([0.0], np.cumsum((N - j) ** 2)))
    # suffix sums over j = k..N-1
    sV2 = cV2[:, N:N + 1] - cV2[:, ks]
    smV = cmV[:, N:N + 1] - cmV[:, ks]
    sm2 = cm2[N] - cm2[ks]
    g2 = (WN - Wk) / (N - fk)
    i2 = (sV2 - 2.0 * g2 * smV + g2 * g2 * sm2) / N

    den = i1 + i2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0.0, num / den, np.nan)
    out = np.full(B, np.nan)
    any_ok = ~np.all(np.isnan(ratio), axis=1)
    out[any_ok] = np.nanmax(ratio[any_ok], axis=1)
    return out


def _single_change_krange(n_steps: int, trim_fraction: float) -> tuple[int, int]:
    if not (0.0 < trim_fraction < 0.5):
        raise InvalidInputError(f"trim fraction must be in (0, 0.5), got {trim_fraction}")
    k_lo = max(1, int(math.ceil(n_steps * trim_fraction - 1e-9)))
    k_hi = min(n_steps - 1, int(math.floor(n_steps * (1.0 - trim_fraction) + 1e-9)))
    if k_hi < k_lo:
        raise InvalidInputError(f"trim fraction {trim_fraction} leaves no grid points")
    return k_lo, k_hi


def interval_pivot(path: BrownianPath) -> float:
    """|W(1)| over the root integrated squared bridge (two-sided CI pivot)."""
    val = float(_pivot_batch(path.steps[None, :])[0])
    if math.isnan(val):
        raise DegenerateStatisticError("degenerate path: the bridge is identically zero")
    return val


def single_change_functional(path: BrownianPath, trim_fraction: float = DEFAULT_TRIM) -> float:
    """Supremum of the squared bridge over the split self-normalizer."""
    k_lo, k_hi = _single_change_krange(path.n_steps, trim_fraction)
    val = float(_single_change_batch(path.steps[None, :], k_lo, k_hi)[0])
    if math.isnan(val):
        raise DegenerateStatisticError("degenerate path: all candidate normalizers vanish")
    return val


def multiple_change_functional(path: BrownianPath, delta=DEFAULT_DELTA) -> float:
    """Forward plus backward supremum of the windowed bridge ratios."""
    frac = _grid.as_fraction(delta)
    N = path.n_steps
    b_arr, a_lo, a_hi = _grid.forward_candidates(N, frac)
    c_arr, d_lo, d_hi = _grid.backward_candidates(N, frac)
    if b_arr.size == 0 or c_arr.size == 0:
        raise InvalidInputError(f"delta={delta} leaves no admissible candidate windows")
    fwd, bwd = multi_limit_scan(path.steps, b_arr, a_lo, a_hi, c_arr, d_lo, d_hi)
    if math.isnan(fwd) or math.isnan(bwd):
        raise DegenerateStatisticError("degenerate path: a windowed normalizer vanished everywhere")
    return float(fwd + bwd)


# -- critical-value tables ---------------------------------------------------

@dataclass(frozen=True)
class CriticalValueTable:
    """Monte Carlo quantiles of one pivotal functional, fully keyed.

    ``quantiles`` maps level q to the ceil(q * n_paths)-th order statistic of
    the simulated functional values (no interpolation). Rebuilding with the
    same key reproduces the table bit for bit.
    """

    functional: str
    params: tuple[tuple[str, float], ...]
    n_steps: int
    n_paths: int
    seed: int
    quantiles: tuple[tuple[float, float], ...]
    created: str

    def quantile(self, q: float) -> float:
        for qq, v in self.quantiles:
            if qq == q:
                return v
        raise MissingTableError(
            f"table {self.key()} holds no quantile {q}; rebuild with it included"
        )

    def param(self, name: str) -> float:
        for k, v in self.params:
            if k == name:
                return v
        raise TableMismatchError(f"table {self.key()} has no parameter {name!r}")

    def key(self) -> str:
        parts = [self.functional]
        parts += [f"{k}{v!r}" for k, v in self.params]
        parts += [f"steps{self.n_steps}", f"paths{self.n_paths}", f"seed{self.seed}"]
        return "_".join(parts)

    def to_json(self) -> str:
        doc = {
            "functional": self.functional,
            "params": {k: v for k, v in self.params},
            "steps": self.n_steps,
            "paths": self.n_paths,
            "seed": self.seed,
            "quantiles": [[q, v] for q, v in self.quantiles],
            "created": self.created,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CriticalValueTable":
        doc = json.loads(text)
        return cls(
            functional=doc["functional"],
            params=tuple(sorted((k, float(v)) for k, v in doc["params"].items())),
            n_steps=int(doc["steps"]),
            n_paths=int(doc["paths"]),
            seed=int(doc["seed"]),
            quantiles=tuple((float(q), float(v)) for q, v in doc["quantiles"]),
            created=str(doc["created"]),
        )


def _canon_params(functional: str, params: dict) -> tuple[tuple[str, float], ...]:
    if functional not in FUNCTIONALS:
        raise InvalidInputError(f"unknown functional {functional!r}; expected one of {FUNCTIONALS}")
    expected = {"interval_pivot": (), "single_change": ("trim",), "multiple_change": ("delta",)}
    if tuple(sorted(params)) != tuple(sorted(expected[functional])):
        raise InvalidInputError(
            f"functional {functional!r} takes parameters {expected[functional]}, got {tuple(params)}"
        )
    return tuple(sorted((k, float(v)) for k, v in params.items()))


def _created_stamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch else time.time()
    return datetime.fromtimestamp(t, tz=timezone.utc).isoformat()


def estimate_quantiles(functional: str, params: dict | None = None,
                       n_paths: int = DEFAULT_PATHS, n_steps: int = DEFAULT_STEPS,
                       qs=STANDARD_QS, seed: int = 0) -> CriticalValueTable:
    """Simulate ``n_paths`` functional values and freeze their quantiles.

    Each path draws from substream (seed, path index), so the result does
    not depend on the internal chunk size. A degenerate path aborts the run:
    under the generator it has probability zero, so hitting one signals an
    RNG fault rather than a statistic to be skipped.
    """
    params = dict(params or {})
    canon = _canon_params(functional, params)
    if n_paths < 100:
        raise InvalidInputError(f"need at least 100 paths, got {n_paths}")
    if n_steps < 10:
        raise InvalidInputError(f"need at least 10 steps, got {n_steps}")
    qs = tuple(sorted(float(q) for q in qs))
    if not qs or any(not (0.0 < q < 1.0) for q in qs):
        raise InvalidInputError(f"quantile levels must lie in (0, 1), got {qs}")

    if functional == "single_change":
        k_lo, k_hi = _single_change_krange(n_steps, dict(canon)["trim"])
    elif functional == "multiple_change":
        frac = _grid.as_fraction(dict(canon)["delta"])
        fwd_idx = _grid.forward_candidates(n_steps, frac)
        bwd_idx = _grid.backward_candidates(n_steps, frac)
        if fwd_idx[0].size == 0 or bwd_idx[0].size == 0:
            raise InvalidInputError("delta leaves no admissible candidate windows")

    values = np.empty(n_paths)
    pos = 0
    while pos < n_paths:
        chunk = min(_PATH_CHUNK, n_paths - pos)
        W = np.empty((chunk, n_steps + 1))
        for i in range(chunk):
            W[i] = simulate_path(n_steps, make_stream(seed, pos + i)).steps
        if functional == "interval_pivot":
            vals = _pivot_batch(W)
        elif functional == "single_change":
            vals = _single_change_batch(W, k_lo, k_hi)
        else:
            vals = np.empty(chunk)
            for i in range(chunk):
                fwd, bwd = multi_limit_scan(W[i], *fwd_idx, *bwd_idx)
                vals[i] = fwd + bwd
        if np.any(np.isnan(vals)):
            raise DegenerateStatisticError(
                "degenerate path in Monte Carlo run; this signals an RNG fault"
            )
        values[pos : pos + chunk] = vals
        pos += chunk

    values.sort()
    quantiles = tuple((q, float(values[min(n_paths - 1, max(0, math.ceil(q * n_paths) - 1))]))
                      for q in qs)
    return CriticalValueTable(
        functional=functional, params=canon, n_steps=int(n_steps), n_paths=int(n_paths),
        seed=int(seed), quantiles=quantiles, created=_created_stamp(),
    )


# -- on-disk cache -----------------------------------------------------------

def cache_dir(override: str | Path | None = None) -> Path:
    if override is not None:
        return Path(override)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "tailshift"


def table_path(functional: str, params: dict, n_steps: int, n_paths: int, seed: int,
               directory: str | Path | None = None) -> Path:
    canon = _canon_params(functional, dict(params))
    stub = CriticalValueTable(functional, canon, n_steps, n_paths, seed, (), "")
    return cache_dir(directory) / (stub.key() + ".json")


def save_table(table: CriticalValueTable, directory: str | Path | None = None) -> Path:
    """Atomically persist a table (write-temp-then-rename)."""
    target = cache_dir(directory) / (table.key() + ".json")
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(table.to_json())
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def load_table(functional: str, params: dict, n_steps: int, n_paths: int, seed: int,
               directory: str | Path | None = None) -> CriticalValueTable:
    """Exact-key lookup; raises MissingTableError with the command to build it."""
    path = table_path(functional, params, n_steps, n_paths, seed, directory)
    if not path.exists():
        raise MissingTableError(
            f"no critical-value table at {path}; build it with "
            f"`tailshift critvals --functional {functional.replace('_', '-')} "
            + "".join(f"--{k} {v} " for k, v in sorted(params.items()))
            + f"--paths {n_paths} --steps {n_steps} --seed {seed}`"
        )
    table = CriticalValueTable.from_json(path.read_text(encoding="utf-8"))
    canon = _canon_params(functional, dict(params))
    if (table.functional, table.params, table.n_steps, table.n_paths, table.seed) != (
        functional, canon, int(n_steps), int(n_paths), int(seed)):
        raise TableMismatchError(f"table file {path} does not match its key")
    return table


def ensure_table(functional: str, params: dict | None = None,
                 n_paths: int = DEFAULT_PATHS, n_steps: int = DEFAULT_STEPS,
                 qs=STANDARD_QS, seed: int = 0,
                 directory: str | Path | None = None) -> CriticalValueTable:
    """Load the exact-key table, simulating and caching it when absent.

    A cached table must contain every requested quantile; otherwise it is
    rebuilt with the union (the functional sample is deterministic, so
    existing entries are unchanged).
    """
    params = dict(params or {})
    try:
        table = load_table(functional, params, n_steps, n_paths, seed, directory)
        have = {q for q, _ in table.quantiles}
        if all(float(q) in have for q in qs):
            return table
        qs = tuple(sorted(have | {float(q) for q in qs}))
    except MissingTableError:
        pass
    table = estimate_quantiles(functional, params, n_paths=n_paths, n_steps=n_steps,
                               qs=qs, seed=seed)
    save_table(table, directory)
    return table
