"""Real-tree geometry induced by an excursion path.

The tree metric between occupation times s, t is
    d(s, t) = f(s) + f(t) - 2 * min f over [s, t],
and the mass measure is the projection of Lebesgue measure on the time axis.
A sparse-table argmin index gives O(1) minima over grid ranges; interval
boundaries off the grid are handled through linear interpolation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .excursion import ExcursionPath, _measure_below, _measure_below_multi
from .rmq import MinIndexTable

__all__ = [
    "RealTreeIndex",
    "VolumeProfile",
    "build_index",
    "minimum_between",
    "argmin_time",
    "tree_distance",
    "ball_volume",
    "sup_ball_volume",
    "inf_ball_volume",
    "extreme_ball_volumes",
    "diameter",
    "branch_point",
    "volume_profile",
    "save_index",
    "load_index",
]


@dataclass(frozen=True)
class RealTreeIndex:
    """Immutable pairing of an excursion path with its range-minimum table."""

    path: ExcursionPath
    table: MinIndexTable

    @property
    def n(self) -> int:
        return self.path.n


def build_index(f: ExcursionPath) -> RealTreeIndex:
    return RealTreeIndex(f, MinIndexTable(f.values))


def _check_time(idx: RealTreeIndex, t: float, name: str = "time") -> None:
    if not (0.0 <= t <= idx.path.duration):
        raise ValueError(f"{name} {t} outside [0, {idx.path.duration}]")


def _grid_range(idx: RealTreeIndex, lo: float, hi: float) -> tuple[int, int]:
    """Grid indices fully inside [lo, hi] (may come back empty as (i0, i0-1))."""
    h = idx.path.grid_step
    i0 = int(np.ceil(lo / h - 1e-12))
    i1 = int(np.floor(hi / h + 1e-12))
    return max(i0, 0), min(i1, idx.n)


def minimum_between(idx: RealTreeIndex, s: float, t: float) -> float:
    """min of the path over [s, t] (arguments in either order)."""
    _check_time(idx, s, "s")
    _check_time(idx, t, "t")
    lo, hi = (s, t) if s <= t else (t, s)
    m = min(float(idx.path.value_at(lo)), float(idx.path.value_at(hi)))
    i0, i1 = _grid_range(idx, lo, hi)
    if i0 <= i1:
        m = min(m, idx.table.min(i0, i1))
    return m


def argmin_time(idx: RealTreeIndex, s: float, t: float) -> float:
    """A time attaining the minimum over [s, t]; grid ties to the smallest index."""
    _check_time(idx, s, "s")
    _check_time(idx, t, "t")
    lo, hi = (s, t) if s <= t else (t, s)
    best_t = lo
    best_v = float(idx.path.value_at(lo))
    v_hi = float(idx.path.value_at(hi))
    i0, i1 = _grid_range(idx, lo, hi)
    if i0 <= i1:
        j = idx.table.argmin(i0, i1)
        vj = float(idx.path.values[j])
        if vj < best_v:
            best_t, best_v = j * idx.path.grid_step, vj
    if v_hi < best_v:
        best_t = hi
    return best_t


def tree_distance(idx: RealTreeIndex, s: float, t: float) -> float:
    """d(s, t) = f(s) + f(t) - 2 * min over [s, t]; zero iff same tree point."""
    fs = float(idx.path.value_at(s))
    ft = float(idx.path.value_at(t))
    return fs + ft - 2.0 * minimum_between(idx, s, t)


def _distance_profile(idx: RealTreeIndex, s: float) -> np.ndarray:
    """d(s, t_j) for every grid index j, in O(n)."""
    _check_time(idx, s, "s")
    v = idx.path.values
    h = idx.path.grid_step
    fs = float(idx.path.value_at(s))
    kf = int(np.floor(s / h + 1e-12))
    kc = int(np.ceil(s / h - 1e-12))
    m = np.empty_like(v)
    m[: kf + 1] = np.minimum.accumulate(v[kf::-1])[::-1]
    m[kc:] = np.minimum.accumulate(v[kc:])
    np.minimum(m, fs, out=m)
    return fs + v - 2.0 * m


def _distance_profile_grid(idx: RealTreeIndex, k: int) -> np.ndarray:
    """d(t_k, t_j) for every grid index j; exact, no interpolation involved."""
    v = idx.path.values
    m = np.empty_like(v)
    m[: k + 1] = np.minimum.accumulate(v[k::-1])[::-1]
    m[k:] = np.minimum.accumulate(v[k:])
    return v[k] + v - 2.0 * m


def ball_volume(idx: RealTreeIndex, s: float, r: float) -> float:
    """Mass of the open ball of radius r around the point at time s.

    Computed as the grid-Lebesgue measure of {t : d(s, t) < r} using the same
    interpolated counting rule as occupation_below, so at s = 0 the two
    quantities agree bit for bit.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    return _measure_below(_distance_profile(idx, s), idx.path.grid_step, r)


def extreme_ball_volumes(idx: RealTreeIndex, radii) -> tuple[np.ndarray, np.ndarray]:
    """(sup, inf) over grid-point centers of the ball volume, per radius."""
    radii = np.asarray(radii, dtype=np.float64)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    h = idx.path.grid_step
    sup = np.full(radii.shape, -np.inf)
    inf = np.full(radii.shape, np.inf)
    for k in range(idx.n + 1):
        vols = _measure_below_multi(_distance_profile_grid(idx, k), h, radii)
        np.maximum(sup, vols, out=sup)
        np.minimum(inf, vols, out=inf)
    return sup, inf


def sup_ball_volume(idx: RealTreeIndex, r: float) -> float:
    sup, _ = extreme_ball_volumes(idx, [r])
    return float(sup[0])


def inf_ball_volume(idx: RealTreeIndex, r: float) -> float:
    _, inf = extreme_ball_volumes(idx, [r])
    return float(inf[0])


def diameter(idx: RealTreeIndex) -> float:
    """Largest distance between two tree points, by the double sweep.

    Starting from the root, the farthest point is the path argmax (distance to
    the root is just the height); the farthest point from that one realizes
    the diameter. Local maxima of the interpolant sit on the grid, so grid
    centers are exhaustive.
    """
    k = int(np.argmax(idx.path.values))
    return float(_distance_profile_grid(idx, k).max())


def branch_point(idx: RealTreeIndex, s: float, s1: float, s2: float) -> float:
    """Time of the unique point common to the three pairwise arcs.

    Among the three pairwise path minima the largest one is attained at the
    branch point; degenerate inputs collapse to the smallest such time.
    """
    pairs = ((s, s1), (s, s2), (s1, s2))
    mins = [minimum_between(idx, a, b) for a, b in pairs]
    best = max(mins)
    times = [argmin_time(idx, a, b) for (a, b), m in zip(pairs, mins) if m == best]
    return min(times)


@dataclass(frozen=True)
class VolumeProfile:
    """Ball-volume curve over a radius grid.

    kind is one of 'at_root', 'at_point', 'supremum', 'infimum'; center is the
    defining time for 'at_point' and None otherwise.
    """

    radii: np.ndarray
    volumes: np.ndarray
    kind: str
    center: float | None = None

    def __post_init__(self):
        r = np.ascontiguousarray(self.radii, dtype=np.float64)
        v = np.ascontiguousarray(self.volumes, dtype=np.float64)
        if self.kind not in ("at_root", "at_point", "supremum", "infimum"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if r.size != v.size:
            raise ValueError("radii and volumes must have equal length")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if np.any(np.diff(v) < -1e-12):
            raise ValueError("volumes must be non-decreasing in the radius")
        if np.any(v < 0) or np.any(v > 1 + 1e-12):
            raise ValueError("volumes must lie in [0, 1]")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "volumes", v)


def volume_profile(
    idx: RealTreeIndex,
    radii,
    kind: str = "at_root",
    center: float | None = None,
) -> VolumeProfile:
    radii = np.asarray(radii, dtype=np.float64)
    if kind == "at_root":
        vols = _measure_below_multi(_distance_profile_grid(idx, 0), idx.path.grid_step, radii)
        return VolumeProfile(radii, vols, kind)
    if kind == "at_point":
        if center is None:
            raise ValueError("'at_point' profile needs a center time")
        vols = _measure_below_multi(_distance_profile(idx, center), idx.path.grid_step, radii)
        return VolumeProfile(radii, vols, kind, center)
    if kind in ("supremum", "infimum"):
        sup, inf = extreme_ball_volumes(idx, radii)
        return VolumeProfile(radii, sup if kind == "supremum" else inf, kind)
    raise ValueError(f"unknown profile kind {kind!r}")


_MAGIC = b"CRTIDX"
_VERSION = 1


def save_index(idx: RealTreeIndex, path: str) -> None:
    """Binary dump of the path (the table is rebuilt on load).

    Layout, all little-endian: 6-byte magic, uint16 version, uint64 grid-interval
    count n, float64 duration, then n+1 float64 grid values.
    """
    v = idx.path.values
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<H", _VERSION))
        fh.write(struct.pack("<Q", idx.n))
        fh.write(struct.pack("<d", idx.path.duration))
        fh.write(v.astype("<f8").tobytes())


def load_index(path: str) -> RealTreeIndex:
    with open(path, "rb") as fh:
        magic = fh.read(6)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not an index dump (bad magic {magic!r})")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported dump version {version}")
        (n,) = struct.unpack("<Q", fh.read(8))
        (duration,) = struct.unpack("<d", fh.read(8))
        raw = fh.read(8 * (n + 1))
        values = np.frombuffer(raw, dtype="<f8")
        if values.size != n + 1:
            raise ValueError(f"{path}: truncated dump")
    return build_index(ExcursionPath(values.astype(np.float64), duration))
