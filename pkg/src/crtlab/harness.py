"""Experiment orchestration: seeded replication, statistics, CSV reports.

Every experiment is deterministic given (config, master seed): replicas draw
from per-replica counter-based streams keyed by (seed, phase, replica index),
worker pools only change how the identical per-replica results are produced,
and reductions always run in replica order. Reports therefore serialize to
byte-identical CSV across runs and thread counts.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import discretetree, realtree, walk
from .excursion import (
    RngStream,
    _measure_below_multi,
    height,
    occupation_below,
    reroot_shift,
    sample_bm_upcrossings,
    sample_excursion,
)

__all__ = [
    "UsageError",
    "ExperimentConfig",
    "StatRow",
    "ExperimentReport",
    "EXPERIMENT_NAMES",
    "default_config",
    "load_config_file",
    "run_experiment",
    "emit_csv",
]

# provenance labels: 'law' = analytic target, 'identity' = definitional fact,
# 'oracle' = target computed by an independent numerical route
LAW = "law"
IDENTITY = "identity"
ORACLE = "oracle"

# stream phases keep replica streams of different sampling stages disjoint
_PHASE_OCCUPATION = 1
_PHASE_LADDER = 2
_PHASE_KS_BASE = 3
_PHASE_KS_SHIFT = 4
_PHASE_TREES = 5
_PHASE_WALKS = 6
_PHASE_ANNEALED = 7
_PHASE_BANDS = 8

# fluctuation-band constants: fixed two-decade windows for the scaled extreme
# ball volumes sup/(r^2 ln(1/r)) and inf/(r^2 / ln(1/r)) over r in [2^-8, 2^-4]
SUP_RATIO_BAND = (0.28, 28.0)
INF_RATIO_BAND = (0.055, 5.5)

ROOT_BALL_RADII = (0.1, 0.2, 0.3, 0.4, 0.5)
MOMENT_RADII = (0.1, 0.2, 0.3)
MOMENT_ORDERS = (1, 2, 3)
BAND_RADII = tuple(2.0 ** (-k) for k in range(8, 3, -1))
ANNEALED_TIMES = tuple(np.logspace(-3.0, -1.5, 12))


class UsageError(Exception):
    """Configuration or invocation error; maps to exit code 2."""


EXPERIMENT_NAMES = (
    "root-volume",
    "upcrossing-law",
    "volume-moments",
    "reroot-ks",
    "resistance-suite",
    "hitting-green",
    "annealed-hk",
    "fluctuation-bands",
)

_DEFAULT_REPLICAS = {
    "root-volume": 10_000,
    "upcrossing-law": 100_000,
    "volume-moments": 10_000,
    "reroot-ks": 10_000,
    "resistance-suite": 100,
    "hitting-green": 2_000,
    "annealed-hk": 200,
    "fluctuation-bands": 10,
}

_DEFAULT_MARKS = {
    "resistance-suite": 64,
    "hitting-green": 16,
    "annealed-hk": 512,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int = 2**14
    replicas: int = 1
    marks: int = 512
    radii: tuple[float, ...] = ()
    times: tuple[float, ...] = ()
    seed: int = 0
    out: str | None = None
    threads: int = 1

    def validated(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENT_NAMES:
            raise UsageError(
                f"unknown experiment {self.experiment!r}; valid names: "
                + ", ".join(EXPERIMENT_NAMES)
            )
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise UsageError(f"grid resolution must be a power of two >= 2, got {self.n}")
        if self.replicas < 1:
            raise UsageError(f"replica count must be >= 1, got {self.replicas}")
        if self.marks < 1:
            raise UsageError(f"mark count must be >= 1, got {self.marks}")
        if self.threads < 1:
            raise UsageError(f"thread count must be >= 1, got {self.threads}")
        for name, grid in (("radii", self.radii), ("times", self.times)):
            arr = np.asarray(grid, dtype=float)
            if arr.size and (np.any(arr <= 0) or np.any(np.diff(arr) <= 0)):
                raise UsageError(f"{name} grid must be positive and strictly increasing")
        return self


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """Config with the per-experiment default sizes filled in."""
    base = dict(
        experiment=experiment,
        replicas=_DEFAULT_REPLICAS.get(experiment, 1),
        marks=_DEFAULT_MARKS.get(experiment, 512),
    )
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**base).validated()


def load_config_file(path: str) -> dict:
    """Flat key=value file; '#' starts a comment. Grids are comma-separated."""
    out: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.rstrip()!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                if key in ("n", "replicas", "marks", "seed", "threads"):
                    out[key] = int(value)
                elif key in ("radii", "times"):
                    out[key] = tuple(float(x) for x in value.split(","))
                elif key == "out":
                    out[key] = value
                else:
                    raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return out


@dataclass(frozen=True)
class StatRow:
    statistic: str
    value: float
    stderr: float
    target: float
    tolerance: float
    passed: bool
    provenance: str


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    replica_streams: tuple[int, ...]
    rows: tuple[StatRow, ...]
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def _stream(seed: int, phase: int, index: int) -> RngStream:
    return RngStream(seed, (phase << 48) | index)


def _blocks(total: int, pieces: int) -> list[tuple[int, int]]:
    pieces = max(1, min(pieces, total))
    bounds = np.linspace(0, total, pieces + 1, dtype=int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run_blocks(fn, args_list: list, threads: int) -> list:
    if threads <= 1 or len(args_list) <= 1:
        return [fn(args) for args in args_list]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, args_list))


def _mean_row(statistic, sample_mean, sample_se, target, extra_tol, provenance) -> StatRow:
    tol = 3.0 * sample_se + extra_tol
    return StatRow(statistic, float(sample_mean), float(sample_se), float(target),
                   float(tol), bool(abs(sample_mean - target) <= tol), provenance)


def _bound_row(statistic, sample_mean, sample_se, bound, provenance) -> StatRow:
    tol = 3.0 * sample_se
    return StatRow(statistic, float(sample_mean), float(sample_se), float(bound),
                   float(tol), bool(sample_mean <= bound + tol), provenance)


def _pvalue_row(statistic, p, provenance, threshold=0.01) -> StatRow:
    return StatRow(statistic, float(p), 0.0, float(threshold), 0.0,
                   bool(p > threshold), provenance)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])


def _format_cell(cell) -> str:
    if isinstance(cell, bool):
        return "true" if cell else "false"
    if isinstance(cell, float):
        return format(cell, ".17g")
    return str(cell)


def emit_csv(report: ExperimentReport, path: str) -> None:
    """Write the statistic rows as RFC-4180 CSV (header, UTF-8, LF endings)."""
    try:
        _write_csv(
            path,
            ["statistic", "value", "stderr", "target", "tolerance", "passed", "provenance"],
            [[r.statistic, r.value, r.stderr, r.target, r.tolerance, r.passed, r.provenance]
             for r in report.rows],
        )
    except OSError as exc:
        raise OSError(f"cannot write report CSV to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# root-volume / volume-moments: occupation statistics of sampled excursions


def _occupation_block(args) -> np.ndarray:
    seed, start, stop, n, radii = args
    radii = np.asarray(radii)
    out = np.empty((stop - start, radii.size))
    for i, rep in enumerate(range(start, stop)):
        f = sample_excursion(n, _stream(seed, _PHASE_OCCUPATION, rep))
        out[i] = _measure_below_multi(f.values, f.grid_step, radii)
    return out


def _occupation_samples(cfg: ExperimentConfig, radii: tuple[float, ...]) -> np.ndarray:
    args = [(cfg.seed, a, b, cfg.n, radii) for a, b in _blocks(cfg.replicas, cfg.threads * 4)]
    return np.concatenate(_run_blocks(_occupation_block, args, cfg.threads), axis=0)


def _root_volume_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    radii = cfg.radii or ROOT_BALL_RADII
    occ = _occupation_samples(cfg, radii)
    rows = []
    for j, r in enumerate(radii):
        mean = occ[:, j].mean()
        se = occ[:, j].std(ddof=1) / math.sqrt(cfg.replicas)
        target = 1.0 - math.exp(-2.0 * r * r)
        rows.append(_mean_row(f"root_ball_volume[r={r:g}]", mean, se, target,
                              4.0 / cfg.n, LAW))
    return rows


def _volume_moment_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    radii = cfg.radii or MOMENT_RADII
    occ = _occupation_samples(cfg, radii)
    rows = []
    for j, r in enumerate(radii):
        for k in MOMENT_ORDERS:
            powered = occ[:, j] ** k
            mean = powered.mean()
            se = powered.std(ddof=1) / math.sqrt(cfg.replicas)
            bound = math.factorial(k + 1) * r ** (2 * k)
            rows.append(_bound_row(f"occupation_moment[k={k},r={r:g}]", mean, se, bound, LAW))
    return rows


# ---------------------------------------------------------------------------
# upcrossing-law: exact ladder samples against Geometric(1/2)


def _upcrossing_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    m = cfg.replicas
    counts = sample_bm_upcrossings(0.5, _stream(cfg.seed, _PHASE_LADDER, 0), size=m)
    binned = np.bincount(np.minimum(counts, 5), minlength=6)
    expected = m * np.array([2.0 ** -(k + 1) for k in range(5)] + [2.0 ** -5])
    chi2_p = float(stats.chisquare(binned, expected).pvalue)
    rows = [_pvalue_row("upcrossing_chi2_pvalue[bins=0..4,5+]", chi2_p, LAW)]

    z = 1.5
    vals = z ** counts.astype(np.float64)
    rows.append(_mean_row("upcrossing_pgf[z=1.5]", vals.mean(),
                          vals.std(ddof=1) / math.sqrt(m), 1.0 / (2.0 - z), 0.0, LAW))
    zero = (counts == 0).astype(np.float64)
    rows.append(_mean_row("upcrossing_mass_at_zero", zero.mean(),
                          zero.std(ddof=1) / math.sqrt(m), 0.5, 0.0, LAW))
    rows.append(_mean_row("upcrossing_mean", counts.mean(),
                          counts.std(ddof=1) / math.sqrt(m), 1.0, 0.0, IDENTITY))
    return rows


# ---------------------------------------------------------------------------
# reroot-ks: path functionals before and after re-rooting at a uniform time


def _reroot_block(args) -> np.ndarray:
    seed, start, stop, n, shifted = args
    out = np.empty((stop - start, 2))
    phase = _PHASE_KS_SHIFT if shifted else _PHASE_KS_BASE
    for i, rep in enumerate(range(start, stop)):
        gen = _stream(seed, phase, rep).generator()
        f = sample_excursion(n, gen)
        if shifted:
            f = reroot_shift(f, float(gen.random()))
        out[i, 0] = height(f)
        out[i, 1] = occupation_below(f, 0.2)
    return out


def _reroot_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    batches = []
    for shifted in (False, True):
        args = [(cfg.seed, a, b, cfg.n, shifted)
                for a, b in _blocks(cfg.replicas, cfg.threads * 4)]
        batches.append(np.concatenate(_run_blocks(_reroot_block, args, cfg.threads), axis=0))
    base, shifted = batches
    p_height = float(stats.ks_2samp(base[:, 0], shifted[:, 0]).pvalue)
    p_occ = float(stats.ks_2samp(base[:, 1], shifted[:, 1]).pvalue)
    return [
        _pvalue_row("reroot_ks_pvalue[height]", p_height, LAW),
        _pvalue_row("reroot_ks_pvalue[occupation_below_0.2]", p_occ, LAW),
    ]


# ---------------------------------------------------------------------------
# resistance-suite: exact identities and inequalities on extracted trees


def _tree_suite_block(args) -> dict:
    seed, start, stop, n, marks = args
    acc = {
        "resistance_err": 0.0,
        "tower_err": 0.0,
        "hitting_err": 0.0,
        "green_err": 0.0,
        "ball_resistance_excess": -np.inf,
        "cut_bound_excess": -np.inf,
        "exit_bound_excess": -np.inf,
        "hk_violations": 0,
        "exit_rows": [],
    }
    for rep in range(start, stop):
        gen = _stream(seed, _PHASE_TREES, rep).generator()
        f = sample_excursion(n, gen)
        idx = realtree.build_index(f)
        tree = discretetree.extract_tree(idx, gen.random(marks))
        nv = tree.n_vertices
        if nv < 4:
            continue
        dist_cache = {}

        def dist_from(v):
            if v not in dist_cache:
                dist_cache[v] = discretetree.distances_from(tree, v)
            return dist_cache[v]

        for u, v in gen.integers(0, nv, size=(8, 2)):
            if u == v:
                continue
            res = discretetree.effective_resistance(tree, [int(u)], [int(v)])
            acc["resistance_err"] = max(acc["resistance_err"],
                                        abs(res - dist_from(int(u))[int(v)]))

        v1 = gen.choice(nv, size=min(6, nv), replace=False)
        v0 = v1[:3]
        via_tower = discretetree.retrace(discretetree.trace_form(tree, v1), v0)
        direct = discretetree.trace_form(tree, v0)
        acc["tower_err"] = max(acc["tower_err"], float(np.max(np.abs(
            via_tower.conductance - direct.conductance))))

        s, s1, s2 = (int(x) for x in gen.choice(nv, size=3, replace=False))
        closed = discretetree.hitting_probability(tree, s, s1, s2)
        solved = discretetree.harmonic_hitting_probability(tree, s, s1, s2)
        acc["hitting_err"] = max(acc["hitting_err"], abs(closed - solved))

        g = discretetree.green_kernel(tree, s1, s2)
        acc["green_err"] = max(acc["green_err"],
                               abs(g[s1] - dist_from(s1)[s2]), abs(g[s2]))

        center = int(gen.integers(0, nv))
        ecc = float(dist_from(center).max())
        r = float(gen.uniform(0.2, 0.8)) * ecc
        res_ball = discretetree.resistance_to_ball_complement(tree, center, r)
        acc["ball_resistance_excess"] = max(acc["ball_resistance_excess"], res_ball - r)
        cuts = discretetree.cut_count(tree, center, r)
        acc["cut_bound_excess"] = max(acc["cut_bound_excess"],
                                      1.0 / res_ball - 8.0 * cuts / r)
        est = walk.exit_time_mean(tree, center, r)
        ball_mass = float(tree.mass[dist_from(center) < r].sum())
        acc["exit_bound_excess"] = max(acc["exit_bound_excess"], est.mean - r * ball_mass)
        acc["exit_rows"].append([rep, center, est.radius, est.mean, est.stderr])
        if not walk.heat_kernel_upper_check(tree, center, r):
            acc["hk_violations"] += 1
    return acc


def _resistance_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    args = [(cfg.seed, a, b, cfg.n, cfg.marks)
            for a, b in _blocks(cfg.replicas, cfg.threads * 2)]
    parts = _run_blocks(_tree_suite_block, args, cfg.threads)

    def peak(key):
        return max(p[key] for p in parts)

    exit_rows = [row for p in parts for row in p["exit_rows"]]
    _write_csv(os.path.join(out_dir, "exit_time.csv"),
               ["center", "radius", "mean", "stderr"],
               [row[1:] for row in exit_rows])

    def err_row(statistic, err, tol):
        return StatRow(statistic, float(err), 0.0, 0.0, tol, bool(err <= tol), LAW)

    return [
        err_row("max|resistance - distance|", peak("resistance_err"), 1e-10),
        err_row("max|trace_tower - direct_trace|", peak("tower_err"), 1e-10),
        err_row("max|hitting_closed - harmonic|", peak("hitting_err"), 1e-10),
        err_row("max green kernel endpoint error", peak("green_err"), 1e-10),
        err_row("max(ball_resistance - r)", peak("ball_resistance_excess"), 1e-12),
        err_row("max(1/R - 8*cuts/r)", peak("cut_bound_excess"), 1e-9),
        err_row("max(exit_mean - r*ball_mass)", peak("exit_bound_excess"), 1e-12),
        err_row("heat_kernel_upper_violations", float(sum(p["hk_violations"] for p in parts)), 0.0),
    ]


# ---------------------------------------------------------------------------
# hitting-green: simulated walks against the Green kernel and hitting formula


def _killed_walk_occupation(tree, start, kill, replicas, gen):
    """Per-vertex occupation times of event-driven walks killed at a vertex."""
    chain = walk.build_generator(tree)
    rates_out = chain.conductance.sum(axis=1) / chain.vertex_mass
    cum = np.cumsum(chain.conductance, axis=1)
    cum /= cum[:, -1][:, None]
    s0 = chain.state_of(start)
    s_kill = chain.state_of(kill)
    occ = np.zeros((replicas, chain.n_states))
    for rep in range(replicas):
        state = s0
        while state != s_kill:
            occ[rep, state] += gen.exponential(1.0 / rates_out[state])
            state = int(np.searchsorted(cum[state], gen.random(), side="right"))
    return chain.vertex_ids, occ


def _hitting_green_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    gen = _stream(cfg.seed, _PHASE_WALKS, 0).generator()
    f = sample_excursion(cfg.n, gen)
    tree = discretetree.extract_tree(realtree.build_index(f), gen.random(cfg.marks))
    nv = tree.n_vertices
    s1, s2, sigma = (int(x) for x in gen.choice(nv, size=3, replace=False))

    ids, occ = _killed_walk_occupation(tree, s1, s2, cfg.replicas, gen)
    g = discretetree.green_kernel(tree, s1, s2)
    target = g[ids] * tree.mass[ids]
    mean = occ.mean(axis=0)
    se = occ.std(axis=0, ddof=1) / math.sqrt(cfg.replicas)
    live = se > 0
    within = np.abs(mean[live] - target[live]) <= 3.0 * se[live]
    frac_occ = float(within.mean())

    hits = np.zeros(cfg.replicas)
    d1 = discretetree.distances_from(tree, s1)
    d2 = discretetree.distances_from(tree, s2)
    chain = walk.build_generator(tree)
    rates_out = chain.conductance.sum(axis=1) / chain.vertex_mass
    cum = np.cumsum(chain.conductance, axis=1)
    cum /= cum[:, -1][:, None]
    st_sigma, st1, st2 = chain.state_of(sigma), chain.state_of(s1), chain.state_of(s2)
    for rep in range(cfg.replicas):
        state = st_sigma
        while state != st1 and state != st2:
            state = int(np.searchsorted(cum[state], gen.random(), side="right"))
        hits[rep] = state == st1
    p_mc = hits.mean()
    p_se = hits.std(ddof=1) / math.sqrt(cfg.replicas)
    p_closed = discretetree.hitting_probability(tree, sigma, s1, s2)

    rows = [
        StatRow("green_occupation_within_3se_fraction", frac_occ, 0.0, 0.95, 0.0,
                bool(frac_occ >= 0.95), ORACLE),
        _mean_row("hitting_probability_mc", p_mc, max(p_se, 1e-12), p_closed, 0.0, ORACLE),
    ]
    return rows


# ---------------------------------------------------------------------------
# annealed-hk: averaged root heat kernel and its log-log slope


def _annealed_block(args) -> np.ndarray:
    seed, start, stop, n, marks, times = args
    return walk._annealed_samples(stop - start, marks, n, np.asarray(times),
                                  _stream(seed, _PHASE_ANNEALED, start))


def _annealed_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    times = np.asarray(cfg.times or ANNEALED_TIMES)
    args = [(cfg.seed, a, b, cfg.n, cfg.marks, tuple(times))
            for a, b in _blocks(cfg.replicas, cfg.threads * 2)]
    rows_per_tree = np.concatenate(_run_blocks(_annealed_block, args, cfg.threads), axis=0)
    mean = rows_per_tree.mean(axis=0)
    se = rows_per_tree.std(axis=0, ddof=1) / math.sqrt(cfg.replicas)

    _write_csv(os.path.join(out_dir, "heatkernel.csv"),
               ["t", "estimate", "stderr", "tree_count"],
               [[float(t), float(v), float(s), cfg.replicas]
                for t, v, s in zip(times, mean, se)])
    scaled = rows_per_tree * times[None, :] ** (2.0 / 3.0)
    _write_csv(os.path.join(out_dir, "annealed_envelope.csv"),
               ["t", "scaled_min", "scaled_max"],
               [[float(t), float(lo), float(hi)]
                for t, lo, hi in zip(times, scaled.min(axis=0), scaled.max(axis=0))])

    slope = float(np.polyfit(np.log(times), np.log(mean), 1)[0])
    return [
        StatRow("annealed_loglog_slope", slope, 0.0, -2.0 / 3.0, 0.07,
                bool(abs(slope + 2.0 / 3.0) <= 0.07), LAW),
    ]


# ---------------------------------------------------------------------------
# fluctuation-bands: scaled extreme ball volumes stay inside fixed bands


def _bands_block(args) -> list[list]:
    seed, start, stop, n, radii = args
    radii = np.asarray(radii)
    out = []
    for rep in range(start, stop):
        gen = _stream(seed, _PHASE_BANDS, rep).generator()
        idx = realtree.build_index(sample_excursion(n, gen))
        sup, inf = realtree.extreme_ball_volumes(idx, radii)
        for r, s_vol, i_vol in zip(radii, sup, inf):
            sup_ratio = s_vol / (r * r * math.log(1.0 / r))
            inf_ratio = i_vol / (r * r / math.log(1.0 / r))
            out.append([rep, float(r), float(s_vol), float(i_vol),
                        float(sup_ratio), float(inf_ratio)])
    return out


def _bands_rows(cfg: ExperimentConfig, out_dir: str) -> list[StatRow]:
    radii = cfg.radii or BAND_RADII
    args = [(cfg.seed, a, b, cfg.n, radii) for a, b in _blocks(cfg.replicas, cfg.threads * 2)]
    records = [row for part in _run_blocks(_bands_block, args, cfg.threads) for row in part]
    _write_csv(os.path.join(out_dir, "fluctuation.csv"),
               ["tree", "r", "sup_volume", "inf_volume", "sup_ratio", "inf_ratio"],
               records)
    sup_ratios = np.array([row[4] for row in records])
    inf_ratios = np.array([row[5] for row in records])

    def band_row(statistic, lo_val, hi_val, band):
        inside = band[0] <= lo_val and hi_val <= band[1]
        return StatRow(statistic, float(hi_val), 0.0, float(band[1]), 0.0,
                       bool(inside), LAW)

    return [
        band_row("sup_volume_ratio_range", sup_ratios.min(), sup_ratios.max(), SUP_RATIO_BAND),
        band_row("inf_volume_ratio_range", inf_ratios.min(), inf_ratios.max(), INF_RATIO_BAND),
        StatRow("sup_volume_ratio_min", float(sup_ratios.min()), 0.0, SUP_RATIO_BAND[0], 0.0,
                bool(sup_ratios.min() >= SUP_RATIO_BAND[0]), LAW),
        StatRow("inf_volume_ratio_min", float(inf_ratios.min()), 0.0, INF_RATIO_BAND[0], 0.0,
                bool(inf_ratios.min() >= INF_RATIO_BAND[0]), LAW),
    ]


_EXPERIMENTS = {
    "root-volume": _root_volume_rows,
    "upcrossing-law": _upcrossing_rows,
    "volume-moments": _volume_moment_rows,
    "reroot-ks": _reroot_rows,
    "resistance-suite": _resistance_rows,
    "hitting-green": _hitting_green_rows,
    "annealed-hk": _annealed_rows,
    "fluctuation-bands": _bands_rows,
}


def _resolve_out_dir(cfg: ExperimentConfig) -> str:
    if cfg.out:
        return cfg.out
    env = os.environ.get("CRT_LAB_OUT")
    if env:
        return os.path.join(env, cfg.experiment)
    return os.path.join("crt-lab-out", cfg.experiment)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run one named experiment: deterministic in (config, seed), writes CSV."""
    cfg = config.validated()
    out_dir = _resolve_out_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()
    rows = _EXPERIMENTS[cfg.experiment](cfg, out_dir)
    wall = time.perf_counter() - started
    report = ExperimentReport(
        config=cfg,
        replica_streams=tuple(range(cfg.replicas)),
        rows=tuple(rows),
        wall_clock=wall,
    )
    emit_csv(report, os.path.join(out_dir, "report.csv"))
    return report
