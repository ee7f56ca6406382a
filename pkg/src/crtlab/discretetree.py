"""Finite weighted trees spanned by marked points of an excursion tree.

Edge lengths double as resistances (point-to-point effective resistance on a
tree equals path length), vertex masses discretize the occupation measure.
All electrical quantities are exact linear algebra: a leaf-peeling direct
solver handles Dirichlet problems in O(#vertices), dense Schur complements
realize trace reductions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .excursion import ExcursionPath
from .realtree import RealTreeIndex, _distance_profile_grid

__all__ = [
    "DiscreteTree",
    "ReducedForm",
    "extract_tree",
    "adjacency",
    "distances_from",
    "effective_resistance",
    "resistance_to_ball_complement",
    "cut_count",
    "hitting_probability",
    "harmonic_hitting_probability",
    "green_kernel",
    "trace_form",
    "retrace",
    "form_resistance",
    "save_tree",
    "load_tree",
]


@dataclass(frozen=True)
class DiscreteTree:
    """Rooted tree with positive edge lengths and probability vertex masses.

    parent[root] is -1; edge_length[v] is the length of the edge to parent[v]
    (0.0 at the root); source_time maps vertices back to times of the
    generating excursion (NaN for vertices that do not come from one).
    """

    parent: np.ndarray
    edge_length: np.ndarray
    mass: np.ndarray
    root: int
    source_time: np.ndarray

    def __post_init__(self):
        parent = np.ascontiguousarray(self.parent, dtype=np.int64)
        edge = np.ascontiguousarray(self.edge_length, dtype=np.float64)
        mass = np.ascontiguousarray(self.mass, dtype=np.float64)
        stime = np.ascontiguousarray(self.source_time, dtype=np.float64)
        nv = parent.size
        if not (edge.size == mass.size == stime.size == nv and nv >= 1):
            raise ValueError("field arrays must share one length >= 1")
        if not (0 <= self.root < nv) or parent[self.root] != -1:
            raise ValueError("root must be the unique vertex with parent -1")
        if np.count_nonzero(parent == -1) != 1:
            raise ValueError("exactly one vertex may have parent -1")
        nonroot = np.arange(nv) != self.root
        if np.any(edge[nonroot] <= 0):
            raise ValueError("edge lengths must be positive")
        if np.any(mass < 0):
            raise ValueError("vertex masses must be non-negative")
        if abs(mass.sum() - 1.0) > 1e-12:
            raise ValueError(f"vertex masses must sum to 1, got {mass.sum()}")
        depth = np.full(nv, -1, dtype=np.int64)
        depth[self.root] = 0
        for v in range(nv):
            chain = []
            u = v
            while depth[u] < 0:
                chain.append(u)
                u = parent[u]
                if u < 0 or u >= nv or len(chain) > nv:
                    raise ValueError("parent array does not form a rooted tree")
            for w in reversed(chain):
                depth[w] = depth[parent[w]] + 1
        for arr in (parent, edge, mass, stime):
            arr.setflags(write=False)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "edge_length", edge)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "source_time", stime)

    @property
    def n_vertices(self) -> int:
        return self.parent.size


def adjacency(tree: DiscreteTree) -> list[dict[int, float]]:
    """Neighbor -> edge length (= resistance) maps, one per vertex."""
    adj: list[dict[int, float]] = [dict() for _ in range(tree.n_vertices)]
    for v in range(tree.n_vertices):
        p = int(tree.parent[v])
        if p >= 0:
            r = float(tree.edge_length[v])
            adj[v][p] = r
            adj[p][v] = r
    return adj


def _distances(adj: list[dict[int, float]], source: int) -> np.ndarray:
    dist = np.full(len(adj), np.inf)
    dist[source] = 0.0
    stack = [source]
    while stack:
        u = stack.pop()
        du = dist[u]
        for w, r in adj[u].items():
            if dist[w] == np.inf:
                dist[w] = du + r
                stack.append(w)
    return dist


def distances_from(tree: DiscreteTree, v: int) -> np.ndarray:
    """Path-length distance from v to every vertex."""
    return _distances(adjacency(tree), v)


# ---------------------------------------------------------------------------
# extraction from a real-tree index


def extract_tree(idx: RealTreeIndex, marks) -> DiscreteTree:
    """Tree spanned by the root, the marked times, and their branch points.

    Marks are resolved to grid times so that every height and meeting level is
    an exact value of the underlying path. Each grid point contributes mass
    1/n to its nearest vertex in tree distance (ties to the smaller vertex).
    """
    marks = np.atleast_1d(np.asarray(marks, dtype=np.float64))
    if marks.size == 0:
        raise ValueError("need at least one marked time")
    if np.any(marks < 0) or np.any(marks > idx.path.duration):
        raise ValueError("marks must lie within [0, duration]")
    n = idx.n
    v = idx.path.values
    h = idx.path.grid_step
    ks = sorted({int(round(m / h)) for m in marks} - {0, n})

    parent = [-1]
    edge = [0.0]
    vtime = [0.0]
    stack: list[tuple[int, float]] = [(0, 0.0)]  # (vertex, height), increasing heights
    prev = 0
    for k in ks:
        a_idx = idx.table.argmin(prev, k)
        a = float(v[a_idx])
        last: tuple[int, float] | None = None
        while stack[-1][1] > a:
            last = stack.pop()
        top_id, top_h = stack[-1]
        if top_h < a:
            b_id = len(parent)
            parent.append(top_id)
            edge.append(a - top_h)
            vtime.append(a_idx * h)
            if last is not None:
                parent[last[0]] = b_id
                edge[last[0]] = last[1] - a
            stack.append((b_id, a))
            attach_id, attach_h = b_id, a
        else:
            attach_id, attach_h = top_id, top_h
        hk = float(v[k])
        if hk > attach_h:
            leaf = len(parent)
            parent.append(attach_id)
            edge.append(hk - attach_h)
            vtime.append(k * h)
            stack.append((leaf, hk))
        prev = k

    nv = len(parent)
    anchors = [int(round(t / h)) for t in vtime]
    best_d = _distance_profile_grid(idx, anchors[0]).copy()
    best_v = np.zeros(n + 1, dtype=np.int64)
    for vid in range(1, nv):
        d = _distance_profile_grid(idx, anchors[vid])
        upd = d < best_d
        best_d[upd] = d[upd]
        best_v[upd] = vid
    counts = np.bincount(best_v[:n], minlength=nv)  # one 1/n atom per grid interval start
    mass = counts.astype(np.float64) / n
    return DiscreteTree(
        parent=np.array(parent, dtype=np.int64),
        edge_length=np.array(edge, dtype=np.float64),
        mass=mass,
        root=0,
        source_time=np.array(vtime, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# Dirichlet problems via leaf peeling


def _peel_solve(
    adj: list[dict[int, float]],
    boundary: dict[int, float],
    keep: frozenset[int] = frozenset(),
) -> tuple[dict[int, float], float]:
    """Solve the harmonic problem with fixed boundary values on a tree network.

    Returns the potentials at boundary and kept vertices plus the Dirichlet
    energy of the harmonic extension. Non-terminal leaves carry no current and
    are peeled off; non-terminal degree-2 vertices are series-contracted; the
    remaining network (at most ~2x the terminal count) is solved densely.
    """
    nv = len(adj)
    protected = set(boundary) | set(keep)
    work = [dict(d) for d in adj]
    alive = np.ones(nv, dtype=bool)

    queue = [u for u in range(nv) if u not in protected and len(work[u]) == 1]
    while queue:
        u = queue.pop()
        if not alive[u] or len(work[u]) != 1:
            continue
        (w, _), = work[u].items()
        del work[w][u]
        work[u].clear()
        alive[u] = False
        if w not in protected and len(work[w]) == 1:
            queue.append(w)

    queue = [u for u in range(nv) if alive[u] and u not in protected and len(work[u]) == 2]
    while queue:
        u = queue.pop()
        if not alive[u] or u in protected or len(work[u]) != 2:
            continue
        (x, rx), (y, ry) = work[u].items()
        del work[x][u]
        del work[y][u]
        work[u].clear()
        alive[u] = False
        r = rx + ry  # no parallel edges can arise on a tree
        work[x][y] = r
        work[y][x] = r

    nodes = [u for u in range(nv) if alive[u]]
    pos = {u: i for i, u in enumerate(nodes)}
    values = np.zeros(len(nodes))
    fixed = np.zeros(len(nodes), dtype=bool)
    for u, val in boundary.items():
        values[pos[u]] = val
        fixed[pos[u]] = True
    free = np.flatnonzero(~fixed)
    if free.size:
        lap = np.zeros((len(nodes), len(nodes)))
        for u in nodes:
            iu = pos[u]
            for w, r in work[u].items():
                c = 1.0 / r
                lap[iu, iu] += c
                lap[iu, pos[w]] -= c
        rhs = -lap[np.ix_(free, np.flatnonzero(fixed))] @ values[fixed]
        values[free] = np.linalg.solve(lap[np.ix_(free, free)], rhs)

    energy = 0.0
    for u in nodes:
        iu = pos[u]
        for w, r in work[u].items():
            if u < w:
                dv = values[iu] - values[pos[w]]
                energy += dv * dv / r
    out = {u: float(values[pos[u]]) for u in protected}
    return out, float(energy)


def _check_vertices(tree_or_size, vs) -> list[int]:
    size = tree_or_size.n_vertices if isinstance(tree_or_size, DiscreteTree) else int(tree_or_size)
    vs = [int(u) for u in np.atleast_1d(np.asarray(vs, dtype=np.int64))]
    if not vs:
        raise ValueError("vertex set must be non-empty")
    if any(u < 0 or u >= size for u in vs):
        raise ValueError(f"vertex id outside [0, {size})")
    return vs


def effective_resistance(tree: DiscreteTree, A, B) -> float:
    """Effective resistance between vertex sets, edge conductances 1/length."""
    a = _check_vertices(tree, A)
    b = _check_vertices(tree, B)
    if set(a) & set(b):
        raise ValueError("terminal sets must be disjoint")
    boundary = {u: 1.0 for u in a}
    boundary.update({u: 0.0 for u in b})
    _, energy = _peel_solve(adjacency(tree), boundary)
    if energy <= 0.0:
        raise ArithmeticError("degenerate network: no current flows")
    return 1.0 / energy


# ---------------------------------------------------------------------------
# balls, boundary splitting, cut counts


def _split_ball(
    tree: DiscreteTree, center: int, r: float
) -> tuple[list[dict[int, float]], np.ndarray, np.ndarray]:
    """Insert zero-mass vertices at distance exactly r from the center.

    Returns (adjacency, mass, dist) for the augmented network; inserted
    vertices carry dist exactly r so the ball boundary is sharp.
    """
    adj = adjacency(tree)
    mass = list(tree.mass)
    dist = list(_distances(adj, center))
    edges = [(u, w) for u in range(len(adj)) for w in adj[u] if u < w]
    for u, w in edges:
        du, dw = dist[u], dist[w]
        if dw < du:
            u, w = w, u
            du, dw = dw, du
        if du < r < dw:
            new = len(adj)
            r_uw = adj[u].pop(w)
            del adj[w][u]
            off = r - du
            adj.append({u: off, w: r_uw - off})
            adj[u][new] = off
            adj[w][new] = r_uw - off
            mass.append(0.0)
            dist.append(r)
    return adj, np.array(mass), np.array(dist)


def resistance_to_ball_complement(tree: DiscreteTree, v: int, r: float) -> float:
    """Effective resistance from v to everything at tree distance >= r."""
    (v,) = _check_vertices(tree, [v])
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    adj, _, dist = _split_ball(tree, v, r)
    comp = np.flatnonzero(dist >= r)
    if comp.size == 0:
        raise ValueError(f"ball of radius {r} covers the whole tree")
    boundary = {int(u): 0.0 for u in comp}
    boundary[v] = 1.0
    _, energy = _peel_solve(adj, boundary)
    return 1.0 / energy


def cut_count(tree: DiscreteTree, v: int, r: float) -> int:
    """Number of points at distance exactly r/4 from v that cut it off from
    the complement of the radius-r ball (edges split as needed)."""
    (v,) = _check_vertices(tree, [v])
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    adj = adjacency(tree)
    dist = _distances(adj, v)
    rq = r / 4.0
    if not rq < dist.max():
        raise ValueError(f"need r/4 < eccentricity of v, got r/4={rq}")
    # orient away from v, then accumulate per-subtree reach
    order = [v]
    par = {v: -1}
    for u in order:
        for w in adj[u]:
            if w not in par:
                par[w] = u
                order.append(w)
    reach = dist.copy()
    for u in reversed(order[1:]):
        p = par[u]
        if reach[u] > reach[p]:
            reach[p] = reach[u]
        # reach[u] is final once all children were folded in (reverse order)
    count = 0
    for u in order[1:]:
        p = par[u]
        if dist[p] < rq < dist[u] and reach[u] >= r:
            count += 1
    for u in order:
        if dist[u] == rq and reach[u] >= r:
            count += 1
    return count


# ---------------------------------------------------------------------------
# hitting probabilities and Green kernels


def harmonic_hitting_probability(tree: DiscreteTree, sigma: int, s1: int, s2: int) -> float:
    """P(hit s1 before s2 from sigma) via the harmonic Dirichlet solve."""
    (sigma,) = _check_vertices(tree, [sigma])
    (s1,) = _check_vertices(tree, [s1])
    (s2,) = _check_vertices(tree, [s2])
    if s1 == s2:
        raise ValueError("the two target vertices must differ")
    vals, _ = _peel_solve(adjacency(tree), {s1: 1.0, s2: 0.0}, keep=frozenset({sigma}))
    return vals[sigma]


def hitting_probability(tree: DiscreteTree, sigma: int, s1: int, s2: int) -> float:
    """P(hit s1 before s2 from sigma) = d(b, s2) / d(s1, s2), b the branch point.

    The closed form is cross-validated against the harmonic solve on every
    call; a disagreement beyond 1e-10 means a solver defect and raises.
    """
    (sigma,) = _check_vertices(tree, [sigma])
    (s1,) = _check_vertices(tree, [s1])
    (s2,) = _check_vertices(tree, [s2])
    if s1 == s2:
        raise ValueError("the two target vertices must differ")
    d1 = distances_from(tree, s1)
    d2 = distances_from(tree, s2)
    closed = (d2[sigma] + d2[s1] - d1[sigma]) / (2.0 * d2[s1])
    solved = harmonic_hitting_probability(tree, sigma, s1, s2)
    if abs(closed - solved) > 1e-10:
        raise RuntimeError(
            f"hitting probability cross-check failed: closed {closed} vs solve {solved}"
        )
    return float(closed)


def green_kernel(tree: DiscreteTree, s1: int, s2: int) -> np.ndarray:
    """Green density (per unit mass) of the walk from s1 killed at s2.

    g(v) = d(b(v, s1, s2), s2), so g(s1) = d(s1, s2) and g(s2) = 0; mean
    occupation time of vertex v is g(v) * mass(v).
    """
    (s1,) = _check_vertices(tree, [s1])
    (s2,) = _check_vertices(tree, [s2])
    if s1 == s2:
        raise ValueError("the two defining vertices must differ")
    d1 = distances_from(tree, s1)
    d2 = distances_from(tree, s2)
    return (d2 + d2[s1] - d1) / 2.0


# ---------------------------------------------------------------------------
# trace (Schur) reductions


@dataclass(frozen=True)
class ReducedForm:
    """Energy form reduced onto a vertex subset.

    conductance[i, j] >= 0 is the effective conductance between vertex_set[i]
    and vertex_set[j]; the associated Laplacian (degree diagonal minus the
    matrix) has zero row sums.
    """

    vertex_set: np.ndarray
    conductance: np.ndarray

    def __post_init__(self):
        ids = np.ascontiguousarray(self.vertex_set, dtype=np.int64)
        k = np.ascontiguousarray(self.conductance, dtype=np.float64)
        if k.shape != (ids.size, ids.size):
            raise ValueError("conductance must be square over the vertex set")
        if not np.allclose(k, k.T, atol=1e-12):
            raise ValueError("conductance matrix must be symmetric")
        if np.any(np.diag(k) != 0.0):
            raise ValueError("conductance diagonal must be zero")
        if np.any(k < 0):
            raise ValueError("conductances must be non-negative")
        ids.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "vertex_set", ids)
        object.__setattr__(self, "conductance", k)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.conductance.sum(axis=1)) - self.conductance

    def energy(self, u: np.ndarray) -> float:
        u = np.asarray(u, dtype=np.float64)
        return float(u @ self.laplacian() @ u)


def _laplacian(tree: DiscreteTree) -> np.ndarray:
    nv = tree.n_vertices
    lap = np.zeros((nv, nv))
    for vtx in range(nv):
        p = int(tree.parent[vtx])
        if p >= 0:
            c = 1.0 / float(tree.edge_length[vtx])
            lap[vtx, vtx] += c
            lap[p, p] += c
            lap[vtx, p] -= c
            lap[p, vtx] -= c
    return lap


def _schur(lap: np.ndarray, keep: np.ndarray) -> np.ndarray:
    rest = np.setdiff1d(np.arange(lap.shape[0]), keep)
    if rest.size == 0:
        s = lap[np.ix_(keep, keep)].copy()
    else:
        a = lap[np.ix_(keep, keep)]
        b = lap[np.ix_(keep, rest)]
        d = lap[np.ix_(rest, rest)]
        s = a - b @ np.linalg.solve(d, b.T)
    return (s + s.T) / 2.0


def _form_from_schur(ids: np.ndarray, s: np.ndarray) -> ReducedForm:
    k = -s
    np.fill_diagonal(k, 0.0)
    scale = max(k.max(initial=0.0), 1.0)
    if np.any(k < -1e-9 * scale):
        raise ArithmeticError("Schur complement produced a negative conductance")
    np.clip(k, 0.0, None, out=k)
    return ReducedForm(ids, k)


def trace_form(tree: DiscreteTree, vertex_set) -> ReducedForm:
    """Reduce the tree's energy form onto a vertex subset (Schur complement).

    Minimizing the Dirichlet energy over all extensions of boundary values on
    the subset yields exactly this form, so effective resistances between kept
    vertices are preserved.
    """
    ids = list(dict.fromkeys(_check_vertices(tree, vertex_set)))
    keep = np.array(ids, dtype=np.int64)
    return _form_from_schur(keep, _schur(_laplacian(tree), keep))


def retrace(form: ReducedForm, vertex_set) -> ReducedForm:
    """Reduce an already-reduced form onto a smaller vertex subset."""
    ids = list(dict.fromkeys(int(u) for u in np.atleast_1d(np.asarray(vertex_set))))
    pos = {int(u): i for i, u in enumerate(form.vertex_set)}
    missing = [u for u in ids if u not in pos]
    if missing:
        raise ValueError(f"vertices {missing} are not part of the form")
    keep = np.array([pos[u] for u in ids], dtype=np.int64)
    return _form_from_schur(np.array(ids, dtype=np.int64), _schur(form.laplacian(), keep))


def form_resistance(form: ReducedForm, u: int, v: int) -> float:
    """Two-point effective resistance inside a reduced network."""
    pos = {int(x): i for i, x in enumerate(form.vertex_set)}
    if u not in pos or v not in pos or u == v:
        raise ValueError("need two distinct vertices of the form")
    lap = form.laplacian()
    i, j = pos[u], pos[v]
    nv = lap.shape[0]
    others = [k for k in range(nv) if k != j]
    current = np.zeros(nv)
    current[i] = 1.0
    current[j] = -1.0
    potentials = np.zeros(nv)
    potentials[others] = np.linalg.solve(lap[np.ix_(others, others)], current[others])
    return float(potentials[i] - potentials[j])


# ---------------------------------------------------------------------------
# serialization


_TREE_HEADER = "crt-tree 1"


def save_tree(tree: DiscreteTree, path: str) -> None:
    """Line-based text dump: `vertex parent edge_length mass source_time`."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_TREE_HEADER + "\n")
        for v in range(tree.n_vertices):
            fh.write(
                f"{v} {int(tree.parent[v])} {tree.edge_length[v]:.17g} "
                f"{tree.mass[v]:.17g} {tree.source_time[v]:.17g}\n"
            )


def load_tree(path: str) -> DiscreteTree:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _TREE_HEADER:
            raise ValueError(f"{path}: unsupported tree format header {header!r}")
        rows = [line.split() for line in fh if line.strip()]
    nv = len(rows)
    parent = np.empty(nv, dtype=np.int64)
    edge = np.empty(nv)
    mass = np.empty(nv)
    stime = np.empty(nv)
    root = -1
    for row in rows:
        if len(row) != 5:
            raise ValueError(f"{path}: malformed vertex line {row}")
        v = int(row[0])
        parent[v] = int(row[1])
        edge[v] = float(row[2])
        mass[v] = float(row[3])
        stime[v] = float(row[4])
        if parent[v] == -1:
            root = v
    return DiscreteTree(parent=parent, edge_length=edge, mass=mass, root=root, source_time=stime)
