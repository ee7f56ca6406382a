"""Continuous-time Markov chains on discrete trees and their heat kernels.

The chain jumps from u to v at rate conductance(u, v) / mass(u), which makes
it reversible with respect to the vertex masses and gives resistance x mass
the dimension of time. On-diagonal transition densities are reported per unit
mass (occupancy probability divided by the vertex mass), computed either
exactly from the spectrum of the mass-weighted Laplacian or by event-driven
simulation with exponential holding times.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .discretetree import DiscreteTree, _split_ball, adjacency, trace_form
from .excursion import RngStream, _resolve_generator, sample_excursion
from .realtree import build_index
from . import discretetree

__all__ = [
    "ChainGenerator",
    "EigenSystem",
    "HeatKernelCurve",
    "ExitTimeEstimate",
    "McEstimate",
    "build_generator",
    "spectrum",
    "spectral_heat_kernel",
    "density_matrix",
    "mc_return_probability",
    "exit_time_mean",
    "heat_kernel_upper_check",
    "annealed_heat_kernel",
]


@dataclass(frozen=True)
class ChainGenerator:
    """Jump-rate data of the chain on the positive-mass vertices of a tree.

    Zero-mass vertices (inserted ball boundaries) are instantaneous states;
    they are eliminated exactly by reducing the conductance network onto the
    positive-mass vertex set before rates are formed.
    """

    vertex_ids: np.ndarray      # original tree vertex per chain state
    conductance: np.ndarray     # dense symmetric, zero diagonal
    vertex_mass: np.ndarray     # strictly positive, sums to 1

    def __post_init__(self):
        for arr in (self.vertex_ids, self.conductance, self.vertex_mass):
            arr.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.vertex_ids.size

    def state_of(self, vertex: int) -> int:
        hits = np.flatnonzero(self.vertex_ids == vertex)
        if hits.size == 0:
            raise ValueError(f"vertex {vertex} carries zero mass and is not a chain state")
        return int(hits[0])

    def jump_rates(self) -> np.ndarray:
        """q(u, v) = conductance(u, v) / mass(u); detailed balance is exact."""
        return self.conductance / self.vertex_mass[:, None]


def build_generator(tree: DiscreteTree) -> ChainGenerator:
    positive = np.flatnonzero(tree.mass > 0)
    if positive.size < 2:
        raise ValueError("chain needs at least two positive-mass vertices")
    if positive.size == tree.n_vertices:
        nv = tree.n_vertices
        cond = np.zeros((nv, nv))
        for v in range(nv):
            p = int(tree.parent[v])
            if p >= 0:
                c = 1.0 / float(tree.edge_length[v])
                cond[v, p] = c
                cond[p, v] = c
        return ChainGenerator(np.arange(nv, dtype=np.int64), cond, tree.mass.copy())
    form = trace_form(tree, positive)
    return ChainGenerator(form.vertex_set.copy(), form.conductance.copy(), tree.mass[positive])


@dataclass(frozen=True)
class EigenSystem:
    """Spectrum of the mass-weighted Laplacian, basis orthonormal in the mass
    inner product (so the constant eigenfunction is identically 1)."""

    eigenvalues: np.ndarray
    basis: np.ndarray           # basis[:, i] is the i-th eigenfunction on states
    vertex_ids: np.ndarray
    vertex_mass: np.ndarray

    def state_of(self, vertex: int) -> int:
        hits = np.flatnonzero(self.vertex_ids == vertex)
        if hits.size == 0:
            raise ValueError(f"vertex {vertex} carries zero mass and has no density")
        return int(hits[0])


def spectrum(tree: DiscreteTree) -> EigenSystem:
    gen = build_generator(tree)
    mass = gen.vertex_mass
    lap = np.diag(gen.conductance.sum(axis=1)) - gen.conductance
    inv_sqrt = 1.0 / np.sqrt(mass)
    sym = lap * inv_sqrt[:, None] * inv_sqrt[None, :]
    sym = (sym + sym.T) / 2.0
    eigenvalues, vectors = np.linalg.eigh(sym)
    np.clip(eigenvalues, 0.0, None, out=eigenvalues)
    basis = vectors * inv_sqrt[:, None]
    return EigenSystem(eigenvalues, basis, gen.vertex_ids.copy(), mass.copy())


@dataclass(frozen=True)
class HeatKernelCurve:
    """(t, density, standard error) triples; stderr is 0 for exact values."""

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.times, dtype=np.float64)
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        s = np.ascontiguousarray(self.stderr, dtype=np.float64)
        if not (t.size == v.size == s.size):
            raise ValueError("times, values, stderr must have equal length")
        if np.any(t <= 0):
            raise ValueError("times must be positive")
        if np.any(v <= 0):
            raise ValueError("density values must be positive")
        if np.any(s < 0):
            raise ValueError("standard errors must be non-negative")
        for arr in (t, v, s):
            arr.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "stderr", s)


def _diagonal_density(es: EigenSystem, state: int, times: np.ndarray) -> np.ndarray:
    weights = es.basis[state] ** 2
    return np.exp(-np.outer(times, es.eigenvalues)) @ weights


def spectral_heat_kernel(tree: DiscreteTree, sigma: int, times) -> HeatKernelCurve:
    """Exact on-diagonal density p_t(sigma, sigma) = sum_i e^{-l_i t} phi_i(sigma)^2."""
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(times <= 0):
        raise ValueError("times must be positive")
    es = spectrum(tree)
    values = _diagonal_density(es, es.state_of(sigma), times)
    return HeatKernelCurve(times, values, np.zeros_like(values))


def density_matrix(tree_or_spectrum, t: float) -> np.ndarray:
    """Full transition-density matrix p_t(u, v) over chain states."""
    es = tree_or_spectrum if isinstance(tree_or_spectrum, EigenSystem) else spectrum(tree_or_spectrum)
    decay = np.exp(-t * es.eigenvalues)
    return (es.basis * decay[None, :]) @ es.basis.T


class McEstimate(NamedTuple):
    value: float
    stderr: float


def mc_return_probability(
    tree: DiscreteTree,
    sigma: int,
    t: float,
    replicas: int,
    rng: RngStream | np.random.Generator,
) -> McEstimate:
    """Monte-Carlo on-diagonal density at time t from exact event-driven paths.

    Each replica simulates the chain with exponential holding times (no time
    step), records whether it occupies sigma at time t, and the occupancy
    frequency is divided by mass(sigma).
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    if t < 0:
        raise ValueError("time must be non-negative")
    gen_chain = build_generator(tree)
    state0 = gen_chain.state_of(sigma)
    mass_sigma = float(gen_chain.vertex_mass[state0])
    rates_out = gen_chain.conductance.sum(axis=1) / gen_chain.vertex_mass
    cum_jump = np.cumsum(gen_chain.conductance, axis=1)
    cum_jump /= cum_jump[:, -1][:, None]
    gen = _resolve_generator(rng)
    hits = 0
    for _ in range(replicas):
        state = state0
        clock = 0.0
        while True:
            clock += gen.exponential(1.0 / rates_out[state])
            if clock > t:
                break
            state = int(np.searchsorted(cum_jump[state], gen.random(), side="right"))
        hits += state == state0
    frac = hits / replicas
    stderr = np.sqrt(frac * (1.0 - frac) / replicas) / mass_sigma
    return McEstimate(frac / mass_sigma, float(stderr))


@dataclass(frozen=True)
class ExitTimeEstimate:
    center: int
    radius: float
    mean: float
    stderr: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError("mean exit time must be positive")
        if self.stderr < 0:
            raise ValueError("standard error must be non-negative")


def exit_time_mean(tree: DiscreteTree, sigma: int, r: float) -> ExitTimeEstimate:
    """Exact mean exit time of the chain from the open radius-r ball at sigma.

    Solves L m = mass on the ball interior with zero boundary values (edges
    crossing the boundary are split at distance exactly r), which is the
    mass-weighted Poisson problem; equivalently sum_y g_ball(sigma, y) mass(y).
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    adj, mass, dist = _split_ball(tree, sigma, r)
    inside = np.flatnonzero(dist < r)
    if inside.size == len(adj):
        raise ValueError(f"ball of radius {r} covers the whole tree")
    pos = {int(u): i for i, u in enumerate(inside)}
    lap = np.zeros((inside.size, inside.size))
    for u in inside:
        iu = pos[int(u)]
        for w, res in adj[u].items():
            c = 1.0 / res
            lap[iu, iu] += c
            if int(w) in pos:
                lap[iu, pos[int(w)]] -= c
    mean_vec = np.linalg.solve(lap, mass[inside])
    return ExitTimeEstimate(center=int(sigma), radius=float(r),
                            mean=float(mean_vec[pos[int(sigma)]]), stderr=0.0)


def heat_kernel_upper_check(tree: DiscreteTree, sigma: int, r: float) -> bool:
    """Audit of the on-diagonal bound p_{2 r m}(sigma, sigma) <= 2 / m with
    m the mass of the open radius-r ball around sigma."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    dist = discretetree.distances_from(tree, sigma)
    ball_mass = float(tree.mass[dist < r].sum())
    if ball_mass <= 0:
        raise ValueError("query vertex carries zero ball mass")
    t = 2.0 * r * ball_mass
    value = float(spectral_heat_kernel(tree, sigma, [t]).values[0])
    return value <= 2.0 / ball_mass * (1.0 + 1e-12)


def _annealed_samples(
    tree_count: int,
    mark_count: int,
    grid_n: int,
    times: np.ndarray,
    rng: RngStream,
) -> np.ndarray:
    """Per-tree root densities, one row per sampled tree (deterministic in rng)."""
    rows = np.empty((tree_count, times.size))
    for i in range(tree_count):
        gen = rng.child(i).generator()
        f = sample_excursion(grid_n, gen)
        idx = build_index(f)
        marks = gen.random(mark_count)
        tree = discretetree.extract_tree(idx, marks)
        es = spectrum(tree)
        rows[i] = _diagonal_density(es, es.state_of(tree.root), times)
    return rows


def annealed_heat_kernel(
    tree_count: int,
    mark_count: int,
    grid_n: int,
    times,
    rng: RngStream,
) -> HeatKernelCurve:
    """Average of the exact root density over independently sampled trees.

    The time grid should stay well above the resolution floor of the sampled
    trees (smallest vertex mass times smallest resistance scale); the harness
    logs that floor alongside the curve.
    """
    if tree_count < 2:
        raise ValueError("need at least two trees to average")
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(times <= 0):
        raise ValueError("times must be positive")
    rows = _annealed_samples(tree_count, mark_count, grid_n, times, rng)
    mean = rows.mean(axis=0)
    stderr = rows.std(axis=0, ddof=1) / np.sqrt(tree_count)
    return HeatKernelCurve(times, mean, stderr)
