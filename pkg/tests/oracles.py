"""Independent brute-force oracles the fast implementations are checked against."""

from __future__ import annotations

import numpy as np


def linear_scan_argmin(values: np.ndarray, lo: int, hi: int) -> int:
    """Reference argmin over an inclusive range, smallest index on ties."""
    window = values[lo : hi + 1]
    return lo + int(np.argmin(window))


def brute_tree_distance(values: np.ndarray, i: int, j: int) -> float:
    """d(t_i, t_j) from the raw definition with a linear-scan minimum."""
    lo, hi = (i, j) if i <= j else (j, i)
    return float(values[i] + values[j] - 2.0 * values[lo : hi + 1].min())


def brute_diameter(values: np.ndarray) -> float:
    """O(n^2) max over grid pairs of the tree distance."""
    n = values.size
    best = 0.0
    for i in range(n):
        m = np.minimum.accumulate(values[i:])
        best = max(best, float((values[i] + values[i:] - 2.0 * m).max()))
    return best


def supersampled_measure_below(values: np.ndarray, grid_step: float, level: float,
                               refine: int = 2048) -> float:
    """Riemann estimate of |{f < level}| for the interpolant, independent of the
    crossing-point rule (accurate to O(grid_step / refine))."""
    n = values.size - 1
    t = np.linspace(0.0, n * grid_step, n * refine, endpoint=False)
    f = np.interp(t, np.arange(n + 1) * grid_step, values)
    return float((f < level).mean() * n * grid_step)


def dense_resistance_matrix(tree) -> np.ndarray:
    """All-pairs effective resistance from the Laplacian pseudoinverse."""
    nv = tree.n_vertices
    lap = np.zeros((nv, nv))
    for v in range(nv):
        p = int(tree.parent[v])
        if p >= 0:
            c = 1.0 / float(tree.edge_length[v])
            lap[v, v] += c
            lap[p, p] += c
            lap[v, p] -= c
            lap[p, v] -= c
    pinv = np.linalg.pinv(lap)
    d = np.diag(pinv)
    return d[:, None] + d[None, :] - 2.0 * pinv


def dense_dirichlet_value(tree, boundary: dict[int, float], at: int) -> float:
    """Harmonic extension evaluated at one vertex, by a full dense solve."""
    nv = tree.n_vertices
    lap = np.zeros((nv, nv))
    for v in range(nv):
        p = int(tree.parent[v])
        if p >= 0:
            c = 1.0 / float(tree.edge_length[v])
            lap[v, v] += c
            lap[p, p] += c
            lap[v, p] -= c
            lap[p, v] -= c
    fixed = np.array(sorted(boundary))
    free = np.setdiff1d(np.arange(nv), fixed)
    vals = np.zeros(nv)
    vals[fixed] = [boundary[int(u)] for u in fixed]
    rhs = -lap[np.ix_(free, fixed)] @ vals[fixed]
    vals[free] = np.linalg.solve(lap[np.ix_(free, free)], rhs)
    return float(vals[at])


def minimized_trace_energy(tree, vertex_ids, u_on_subset: np.ndarray) -> float:
    """Trace form evaluated by explicit energy minimization over extensions."""
    nv = tree.n_vertices
    boundary = {int(v): float(x) for v, x in zip(vertex_ids, u_on_subset)}
    lap = np.zeros((nv, nv))
    for v in range(nv):
        p = int(tree.parent[v])
        if p >= 0:
            c = 1.0 / float(tree.edge_length[v])
            lap[v, v] += c
            lap[p, p] += c
            lap[v, p] -= c
            lap[p, v] -= c
    fixed = np.array(sorted(boundary))
    free = np.setdiff1d(np.arange(nv), fixed)
    vals = np.zeros(nv)
    vals[fixed] = [boundary[int(x)] for x in fixed]
    if free.size:
        rhs = -lap[np.ix_(free, fixed)] @ vals[fixed]
        vals[free] = np.linalg.solve(lap[np.ix_(free, free)], rhs)
    return float(vals @ lap @ vals)
