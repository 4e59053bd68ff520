"""Samplers for the fixed-point law: population dynamics and weighted trees.

The pool sampler applies one smoothing round to an empirical sample cloud:
every new sample is sum_i a_i z_i with a fresh branch draw and z_i resampled
with replacement from the previous pool.  The tree sampler builds the
weighted branching tree explicitly and is unbiased at finite depth for
models whose mean matrix has unit spectral radius.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._common import (
    DEFAULT_NODE_BUDGET,
    as_generator,
    resolve_budget,
    spawn_generators,
)
from .errors import SupercriticalBlowup
from .matrices import pf_decompose, spectral_radius
from .models import ModelSpec, expected_n, explicit_atoms, mean_sum_matrix, mu_mean

_TREE_CHUNK = 512


@dataclass
class SamplePool:
    """Empirical cloud of K nonnegative vectors approximating the fixed point."""

    dim: int
    samples: np.ndarray  # (K, dim)
    generation: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != self.dim:
            raise ValueError("samples must be a (K, dim) array")
        if self.samples.shape[0] < 1:
            raise ValueError("pool must hold at least one sample")
        if np.any(self.samples < 0):
            raise ValueError("pool samples must be entrywise nonnegative")

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    def norms(self) -> np.ndarray:
        return self.samples.sum(axis=1)

    def nonzero_directions(self) -> np.ndarray:
        n = self.norms()
        keep = n > 0
        return self.samples[keep] / n[keep, None]


def constant_pool(init, k: int, generation: int = 0) -> SamplePool:
    init = np.asarray(init, dtype=float)
    return SamplePool(dim=init.size, samples=np.tile(init, (k, 1)), generation=generation)


def heavy_tail_pool(spec: ModelSpec, k: int, tail_index: float, seed,
                    direction=None) -> SamplePool:
    """Pool of c * direction with c Pareto(tail_index).

    Regularly varying initial conditions are the basin of the fixed point
    when the mean matrix has spectral radius below one (the point-mass
    iteration then collapses to zero in probability).
    """
    if not 0 < tail_index:
        raise ValueError("tail_index must be positive")
    rng = as_generator(seed)
    if direction is None:
        direction = pf_decompose(mean_sum_matrix(spec)).right
    direction = np.asarray(direction, dtype=float)
    w = rng.uniform(size=k) ** (-1.0 / tail_index)
    return SamplePool(dim=spec.dim, samples=w[:, None] * direction[None, :])


def _atom_arrays(spec: ModelSpec):
    """Explicit atoms as (probs, list of (n_b, d, d) stacked branches)."""
    atoms = explicit_atoms(spec)
    probs = np.array([p for p, _ in atoms])
    branches = [np.stack(br) for _, br in atoms]
    return probs, branches


def iterate_pool(spec: ModelSpec, pool: SamplePool, seed) -> SamplePool:
    """One smoothing round over the pool; deterministic given the seed.

    Resampling is with replacement and value-independent, so iterating from
    c * pool with the same seed yields exactly c times the iterated pool.
    """
    if pool.dim != spec.dim:
        raise ValueError("pool dimension does not match the model")
    rng = as_generator(seed)
    probs, branches = _atom_arrays(spec)
    k = pool.size
    old = pool.samples
    new = np.zeros_like(old)
    atom_idx = rng.choice(len(branches), size=k, p=probs)
    for b, mats in enumerate(branches):
        rows = np.flatnonzero(atom_idx == b)
        if rows.size == 0:
            continue
        acc = np.zeros((rows.size, spec.dim))
        for a in mats:
            picks = rng.integers(0, k, size=rows.size)
            acc += old[picks] @ a.T
        new[rows] = acc
    return SamplePool(dim=spec.dim, samples=new, generation=pool.generation + 1)


def run_fixed_point(spec: ModelSpec, k: int, rounds: int, init=None, seed=0,
                    initial_pool: SamplePool | None = None):
    """Iterate the pool `rounds` times from a constant cloud at `init`.

    Returns (pool, mean_norm_history); the history has rounds + 1 entries and
    starts with the initial pool.  An explicit initial_pool overrides init.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    if initial_pool is not None:
        pool = initial_pool
    else:
        if init is None:
            init = pf_decompose(mean_sum_matrix(spec)).right
        pool = constant_pool(init, k)
    history = [float(pool.norms().mean())]
    streams = spawn_generators(seed, rounds)
    for rng in streams:
        pool = iterate_pool(spec, pool, rng)
        history.append(float(pool.norms().mean()))
    return pool, np.array(history)


# ---------------------------------------------------------------------------
# Weighted branching tree
# ---------------------------------------------------------------------------


@dataclass
class _TreeLevels:
    """Edge lists of a forest grown level by level.

    Level l stores, for every edge from a depth-l node to a depth-(l+1)
    node, the parent's index inside level l and the index of the edge matrix
    in `matrix_table`.  Children are ordered so that level l+1 node j is the
    child created by edge j of level l.
    """

    n_trees: int
    matrix_table: list
    edge_parent: list = field(default_factory=list)   # per level: int arrays
    edge_matrix: list = field(default_factory=list)
    node_tree: list = field(default_factory=list)     # per level: tree id per node


def _grow_forest(spec: ModelSpec, depth: int, n_trees: int, rng,
                 node_budget: int) -> _TreeLevels:
    probs, branches = _atom_arrays(spec)
    table: list = []
    branch_mat_ids = []
    for mats in branches:
        ids = []
        for a in mats:
            table.append(a)
            ids.append(len(table) - 1)
        branch_mat_ids.append(np.array(ids, dtype=np.int64))
    branch_sizes = np.array([len(ids) for ids in branch_mat_ids])

    levels = _TreeLevels(n_trees=n_trees, matrix_table=table)
    tree_of_node = np.arange(n_trees, dtype=np.int64)
    levels.node_tree.append(tree_of_node)
    nodes_per_tree = np.ones(n_trees, dtype=np.int64)

    for _ in range(depth):
        m = tree_of_node.size
        atom_idx = rng.choice(len(branches), size=m, p=probs)
        counts = branch_sizes[atom_idx]
        edge_parent = np.repeat(np.arange(m, dtype=np.int64), counts)
        starts = np.cumsum(counts) - counts
        edge_matrix = np.empty(int(counts.sum()), dtype=np.int64)
        for b, ids in enumerate(branch_mat_ids):
            rows = np.flatnonzero(atom_idx == b)
            for j, mid in enumerate(ids):
                edge_matrix[starts[rows] + j] = mid
        child_tree = tree_of_node[edge_parent]
        nodes_per_tree += np.bincount(child_tree, minlength=n_trees)
        if nodes_per_tree.max(initial=0) > node_budget:
            raise SupercriticalBlowup(
                f"tree grew past {node_budget} nodes before reaching depth {depth}"
            )
        levels.edge_parent.append(edge_parent)
        levels.edge_matrix.append(edge_matrix)
        levels.node_tree.append(child_tree)
        tree_of_node = child_tree
    return levels


def _apply_matrices(table, mat_ids, vecs) -> np.ndarray:
    """Row i of the result is table[mat_ids[i]] @ vecs[i]."""
    out = np.empty_like(vecs)
    for mid in np.unique(mat_ids):
        sel = mat_ids == mid
        out[sel] = vecs[sel] @ table[mid].T
    return out


def martingale_samples(spec: ModelSpec, depth: int, trials: int, seed,
                       node_budget: int | None = None,
                       check_critical: bool = True) -> np.ndarray:
    """trials independent draws of sum over depth-n nodes of G_u v.

    v is the unit-L1 Perron eigenvector of the mean sum matrix; the sum is
    then a mean-one vector martingale in the depth whenever E[N] times the
    single-matrix mean has unit spectral radius.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if check_critical:
        m1 = expected_n(spec) * spectral_radius(mu_mean(spec))
        if abs(m1 - 1.0) > 1e-9:
            raise ValueError(
                f"tree martingale needs a critical mean (E[N] kappa(1) = {m1!r})"
            )
    budget = resolve_budget(node_budget, DEFAULT_NODE_BUDGET)
    v = pf_decompose(mean_sum_matrix(spec)).right
    out = np.empty((trials, spec.dim))
    n_chunks = (trials + _TREE_CHUNK - 1) // _TREE_CHUNK
    streams = spawn_generators(seed, n_chunks)
    done = 0
    for rng in streams:
        chunk = min(_TREE_CHUNK, trials - done)
        levels = _grow_forest(spec, depth, chunk, rng, budget)
        vecs = np.tile(v, (levels.node_tree[depth].size, 1))
        for lvl in range(depth - 1, -1, -1):
            contrib = _apply_matrices(levels.matrix_table,
                                      levels.edge_matrix[lvl], vecs)
            n_parent = levels.node_tree[lvl].size
            acc = np.zeros((n_parent, spec.dim))
            for j in range(spec.dim):
                acc[:, j] = np.bincount(levels.edge_parent[lvl],
                                        weights=contrib[:, j],
                                        minlength=n_parent)
            vecs = acc
        out[done:done + chunk] = vecs
        done += chunk
    return out


def martingale_sample(spec: ModelSpec, depth: int, seed,
                      node_budget: int | None = None) -> np.ndarray:
    """One tree draw of sum over depth-n nodes of G_u v."""
    return martingale_samples(spec, depth, 1, seed, node_budget=node_budget)[0]


def survival_counts(spec: ModelSpec, probes, depth: int, seed,
                    zero_tol: float = 1e-12,
                    node_budget: int | None = None) -> np.ndarray:
    """Counts of depth-l nodes with G_u^T t != 0, per level and probe.

    Returns an integer array of shape (depth + 1, n_probes) for one simulated
    tree; G_u^T t is declared nonzero when its L1 norm exceeds zero_tol |t|.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if not probes.any(axis=1).all():
        raise ValueError("probe directions must be nonzero")
    budget = resolve_budget(node_budget, DEFAULT_NODE_BUDGET)
    rng = as_generator(seed)
    levels = _grow_forest(spec, depth, 1, rng, budget)

    thresholds = zero_tol * np.abs(probes).sum(axis=1)
    counts = np.empty((depth + 1, probes.shape[0]), dtype=np.int64)
    # carriers[u] = G_u^T, propagated as G_(ui)^T = A_(ui)^T G_u^T
    carriers = np.eye(spec.dim)[None, :, :]
    counts[0] = (np.abs(carriers @ probes.T).sum(axis=1) > thresholds).sum(axis=0)
    for lvl in range(depth):
        mat_ids = levels.edge_matrix[lvl]
        parents = levels.edge_parent[lvl]
        child = np.empty((mat_ids.size, spec.dim, spec.dim))
        for mid in np.unique(mat_ids):
            sel = mat_ids == mid
            child[sel] = levels.matrix_table[mid].T @ carriers[parents[sel]]
        carriers = child
        counts[lvl + 1] = (np.abs(carriers @ probes.T).sum(axis=1)
                           > thresholds).sum(axis=0)
    return counts


def count_surviving_directions(spec: ModelSpec, t, depth: int, seed,
                               zero_tol: float = 1e-12,
                               node_budget: int | None = None) -> int:
    """Number of depth-n tree nodes whose transposed weight keeps t alive."""
    t = np.asarray(t, dtype=float)
    if not t.any():
        raise ValueError("t must be nonzero")
    counts = survival_counts(spec, t[None, :], depth, seed,
                             zero_tol=zero_tol, node_budget=node_budget)
    return int(counts[depth, 0])


# ---------------------------------------------------------------------------
# Pool snapshots
# ---------------------------------------------------------------------------


def pool_to_csv(pool: SamplePool, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"z{i}" for i in range(pool.dim)])
        for row in pool.samples:
            writer.writerow([format(x, ".17g") for x in row])


def pool_from_csv(path, generation: int = 0) -> SamplePool:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    samples = np.asarray(rows, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != len(header):
        raise ValueError("malformed pool snapshot")
    return SamplePool(dim=samples.shape[1], samples=samples, generation=generation)
