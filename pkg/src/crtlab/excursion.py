"""Normalized Brownian excursion sampling and path functionals.

Paths live on a uniform grid over [0, duration] and are treated as piecewise
linear between grid points by every functional in this module. The default
sampler realizes the excursion as the norm of a 3-d Brownian bridge pinned at
zero, which is O(n) per path and exact in law at the grid points; the rotated
bridge (sample_bridge + vervaat) is kept as the classical alternative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rmq import MinIndexTable

__all__ = [
    "RngStream",
    "BridgePath",
    "ExcursionPath",
    "sample_bridge",
    "vervaat",
    "sample_excursion",
    "rescale",
    "height",
    "oscillation",
    "occupation_below",
    "upcrossings",
    "reroot_shift",
    "sample_bm_upcrossings",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: (seed, stream_id) pins the draw sequence.

    Distinct stream_ids under one seed give statistically independent streams,
    so per-replica streams can be consumed in any order (or in parallel) while
    reproducing the exact same draws.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & _MASK64) | ((self.stream_id & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, offset: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + offset)


def _resolve_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def _freeze(values: np.ndarray) -> np.ndarray:
    v = np.ascontiguousarray(values, dtype=np.float64)
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class BridgePath:
    """Brownian bridge on [0, 1] sampled on a uniform grid, endpoints pinned to 0."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        v = self.values
        if v.size < 3:
            raise ValueError("bridge needs at least 2 grid intervals")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("bridge endpoints must be exactly 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("bridge values must be finite")

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def grid_step(self) -> float:
        return 1.0 / self.n


@dataclass(frozen=True)
class ExcursionPath:
    """Non-negative path on a uniform grid over [0, duration], zero at both ends."""

    values: np.ndarray
    duration: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        v = self.values
        if v.size < 3:
            raise ValueError("excursion needs at least 2 grid intervals")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("excursion endpoints must be exactly 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("excursion values must be finite")
        if np.any(v < 0):
            raise ValueError("excursion values must be non-negative")

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def grid_step(self) -> float:
        return self.duration / self.n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.grid_step

    def value_at(self, t) -> np.ndarray | float:
        """Piecewise-linear evaluation at scalar or array times in [0, duration]."""
        return np.interp(t, self.times, self.values)


def _require_power_of_two(n: int) -> None:
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"grid resolution must be a power of two >= 2, got {n}")


def sample_bridge(n: int, rng: RngStream | np.random.Generator) -> BridgePath:
    """Sample a standard Brownian bridge at t_i = i/n via B_t - t*B_1."""
    _require_power_of_two(n)
    gen = _resolve_generator(rng)
    steps = gen.standard_normal(n) * np.sqrt(1.0 / n)
    walk = np.empty(n + 1)
    walk[0] = 0.0
    np.cumsum(steps, out=walk[1:])
    walk -= np.arange(n + 1) * (walk[n] / n)
    walk[n] = 0.0
    return BridgePath(walk)


def vervaat(bridge: BridgePath) -> ExcursionPath:
    """Rotate a bridge about its minimum (ties to the smallest index).

    The rotation re-reads the same increments in cyclic order starting from the
    argmin, then subtracts the minimum, so the result is non-negative with both
    endpoints exactly 0.
    """
    v = bridge.values
    n = bridge.n
    m = int(np.argmin(v))  # np.argmin already takes the first minimum
    if m == 0:
        return ExcursionPath(v - v[0], 1.0)
    out = np.empty(n + 1)
    out[: n - m] = v[m:n] - v[m]
    out[n - m :] = v[: m + 1] - v[m]
    out[0] = 0.0
    out[n] = 0.0
    np.maximum(out, 0.0, out=out)  # clamp -0.0 / rounding residue at the seam
    return ExcursionPath(out, 1.0)


def sample_excursion(n: int, rng: RngStream | np.random.Generator) -> ExcursionPath:
    """Sample a normalized excursion, exact in law at the grid points.

    Uses the norm of a three-dimensional Brownian bridge pinned at zero, whose
    grid marginals follow the normalized-excursion law exactly. The rotated
    bridge (vervaat) converges to the same law but conditions the path
    positive only at grid points, which leaves an O(n^-1/2) bias in occupation
    functionals; measured at n = 2^14 that bias is 10-20 standard errors wide
    at 10^4 replicas, far outside the statistical tolerances used downstream.
    """
    _require_power_of_two(n)
    gen = _resolve_generator(rng)
    steps = gen.standard_normal((3, n)) * np.sqrt(1.0 / n)
    coords = np.zeros((3, n + 1))
    np.cumsum(steps, axis=1, out=coords[:, 1:])
    coords -= np.arange(n + 1) * (coords[:, [n]] / n)
    coords[:, n] = 0.0
    values = np.sqrt(np.einsum("ij,ij->j", coords, coords))
    return ExcursionPath(values, 1.0)


def rescale(f: ExcursionPath, c: float) -> ExcursionPath:
    """Time-space rescaling t -> (1/sqrt(c)) f(c t), keeping the point count.

    The output grid t_i = i * duration / (c n) maps back onto the input grid
    exactly, so no resampling error is introduced: only the heights change.
    """
    if not c > 0:
        raise ValueError(f"rescale factor must be positive, got {c}")
    if c == 1.0:
        return f
    return ExcursionPath(f.values / np.sqrt(c), f.duration / c)


def height(f: ExcursionPath) -> float:
    """Maximum of the path."""
    return float(f.values.max())


def oscillation(f: ExcursionPath, s: float, t: float, delta: float) -> float:
    """sup |f(r) - f(r')| over r, r' in [s, t] with |r - r'| <= delta.

    Exact for the piecewise-linear interpolant: the supremum is attained either
    at a pair of grid/endpoint samples or with one point offset by exactly
    delta from a sample, and both candidate families are scanned.
    """
    if not (0.0 <= s < t <= f.duration):
        raise ValueError(f"need 0 <= s < t <= duration, got [{s}, {t}]")
    if not (0.0 < delta <= t - s):
        raise ValueError(f"window must satisfy 0 < delta <= t - s, got {delta}")
    h = f.grid_step
    i0 = int(np.ceil(s / h - 1e-12))
    i1 = int(np.floor(t / h + 1e-12))
    times = np.arange(i0, i1 + 1) * h
    if times.size == 0 or times[0] > s:
        times = np.concatenate([[s], times])
    if times[-1] < t:
        times = np.concatenate([times, [t]])
    vals = np.asarray(f.value_at(times))

    best = 0.0
    # one end offset by exactly delta (clamped ends stay inside the window)
    fwd = np.asarray(f.value_at(np.minimum(times + delta, t)))
    bwd = np.asarray(f.value_at(np.maximum(times - delta, s)))
    best = max(best, float(np.abs(vals - fwd).max()), float(np.abs(vals - bwd).max()))

    # sample-to-sample pairs within delta, via range extrema
    lo_table = MinIndexTable(vals)
    hi_table = MinIndexTable(-vals)
    right = np.searchsorted(times, times + delta + 1e-15, side="right") - 1
    idx = np.arange(times.size)
    has_span = right > idx
    if np.any(has_span):
        i = idx[has_span]
        j = right[has_span]
        lo = vals[lo_table.argmin_batch(i, j)]
        hi = vals[hi_table.argmin_batch(i, j)]
        best = max(best, float(np.max(hi - vals[i])), float(np.max(vals[i] - lo)))
    return best


def _measure_below(vals: np.ndarray, grid_step: float, level: float) -> float:
    """Lebesgue measure of {t : f(t) < level} for the linear interpolant."""
    a = vals[:-1]
    b = vals[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    flat = hi == lo
    span = np.where(flat, 1.0, hi - lo)
    frac = np.clip((level - lo) / span, 0.0, 1.0)
    frac = np.where(flat, (lo < level).astype(np.float64), frac)
    return float(frac.sum() * grid_step)


def _measure_below_multi(vals: np.ndarray, grid_step: float, levels: np.ndarray) -> np.ndarray:
    """Vectorized _measure_below over several levels."""
    a = vals[:-1]
    b = vals[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    flat = hi == lo
    span = np.where(flat, 1.0, hi - lo)
    lv = np.asarray(levels, dtype=np.float64)[:, None]
    frac = np.clip((lv - lo) / span, 0.0, 1.0)
    frac = np.where(flat, (lo < lv).astype(np.float64), frac)
    return frac.sum(axis=1) * grid_step


def occupation_below(f: ExcursionPath, level: float) -> float:
    """Time the path spends strictly below the level, by linear interpolation.

    Partial grid segments are counted through their interpolated crossing
    points rather than by raw point counts, which removes the O(1/n) counting
    bias of the rounded rule.
    """
    if level < 0:
        raise ValueError(f"level must be non-negative, got {level}")
    return _measure_below(f.values, f.grid_step, level)


def upcrossings(f: ExcursionPath, a: float, b: float) -> int:
    """Number of passages of the path from <= a up to >= b.

    Standard alternating scan; grid values suffice because a linear segment
    reaching a level implies one of its endpoints does.
    """
    if not (0 < a < b):
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    v = f.values
    low = v <= a
    high = v >= b
    events = np.flatnonzero(low | high)
    if events.size == 0:
        return 0
    sym = high[events]
    # the path starts at 0 <= a, so the scan is armed before the first event
    return int(np.count_nonzero(sym[1:] & ~sym[:-1]) + int(sym[0]))


def reroot_shift(f: ExcursionPath, s: float) -> ExcursionPath:
    """Cyclic re-rooting of a normalized excursion at time s.

    Output value at lag t is the tree distance from the new base point sigma_s
    to the point visited at time s + t (mod 1). The time s is resolved to the
    nearest grid point so every minimum is computed exactly.
    """
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"shift time must lie in [0, 1], got {s}")
    if f.duration != 1.0:
        raise ValueError("re-rooting is defined for normalized (duration 1) paths")
    n = f.n
    k = int(round(s * n))
    if k == 0 or k == n:
        return f
    v = f.values
    fwd_min = np.minimum.accumulate(v[k:])        # min over [k, k+i]
    bwd_min = np.minimum.accumulate(v[k::-1])[::-1]  # min over [j, k]
    first = v[k] + v[k:] - 2.0 * fwd_min          # lags 0 .. n-k
    second = v[k] + v[: k + 1] - 2.0 * bwd_min    # lags n-k .. n
    out = np.concatenate([first[:-1], second])
    out[0] = 0.0
    out[n] = 0.0
    np.maximum(out, 0.0, out=out)
    return ExcursionPath(out, 1.0)


def sample_bm_upcrossings(
    delta: float,
    rng: RngStream | np.random.Generator,
    size: int | None = None,
) -> int | np.ndarray:
    """Upcrossings of [delta, 2*delta] by Brownian motion from delta killed at 0.

    Sampled exactly through the fair-coin ladder: from delta the path reaches
    2*delta before 0 with probability 1/2 (gambler's ruin by symmetry), and
    after each success it returns to delta almost surely, so the count is
    Geometric(1/2) on {0, 1, 2, ...} for every delta. No path discretization.
    """
    if not delta > 0:
        raise ValueError(f"level must be positive, got {delta}")
    gen = _resolve_generator(rng)
    if size is None:
        count = 0
        while gen.random() < 0.5:
            count += 1
        return count
    counts = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    while active.size:
        heads = gen.random(active.size) < 0.5
        counts[active[heads]] += 1
        active = active[heads]
    return counts
