"""Markov Clustering on sparse column-stochastic matrices.

The flow matrix starts from the symmetrized citation graph with unit
self-loops, every column normalized to sum 1. Each iteration applies
expansion (matrix power), inflation (entrywise power + renormalization)
and pruning (drop tiny entries, never a column maximum) until the matrix
stops changing. Clusters are read off the limit matrix via its attractor
structure.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .clustering import Clustering, Provenance
from .graphstore import CitationGraph

log = logging.getLogger(__name__)

COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MclParams:
    """Runtime knobs; the defaults are the canonical setting."""

    expansion: int = 2
    inflation: float = 2.0
    prune_threshold: float = 1e-4
    max_iterations: int = 200
    convergence_epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.expansion < 2:
            raise ValueError("expansion must be an integer >= 2")
        if self.inflation <= 1.0:
            raise ValueError("inflation must be > 1")
        if self.prune_threshold < 0:
            raise ValueError("prune_threshold must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_epsilon <= 0:
            raise ValueError("convergence_epsilon must be > 0")


def _normalize_columns(m: sp.csc_matrix) -> sp.csc_matrix:
    sums = np.asarray(m.sum(axis=0)).ravel()
    if np.any(sums <= 0):
        raise ValueError("cannot normalize a column with non-positive sum")
    m.data /= np.repeat(sums, np.diff(m.indptr))
    return m


def check_column_stochastic(m: sp.spmatrix, tol: float = COLUMN_SUM_TOL) -> None:
    """Raise unless every column sums to 1 within tol and entries are >= 0."""
    m = m.tocsc()
    if m.nnz and m.data.min() < 0:
        raise ValueError("negative entry in stochastic matrix")
    sums = np.asarray(m.sum(axis=0)).ravel()
    worst = float(np.abs(sums - 1.0).max()) if sums.size else 0.0
    if worst > tol:
        raise ValueError(f"column sums deviate from 1 by {worst:g} (> {tol:g})")


def build_transition_matrix(graph: CitationGraph) -> sp.csc_matrix:
    """Column-stochastic flow matrix of the symmetrized graph.

    The graph is symmetrized (edge if a citation exists in either
    direction), every node gets a self-loop of weight 1, and each column
    is normalized to sum 1; isolated nodes therefore get a lone
    self-entry of 1.
    """
    n = graph.n_nodes
    u, v = graph.undirected_edges
    rows = np.concatenate([u, v, np.arange(n, dtype=np.int64)])
    cols = np.concatenate([v, u, np.arange(n, dtype=np.int64)])
    data = np.ones(rows.size, dtype=np.float64)
    m = sp.csc_matrix((data, (rows, cols)), shape=(n, n))
    m.sort_indices()
    return _normalize_columns(m)


def expand(m: sp.csc_matrix, e: int = 2) -> sp.csc_matrix:
    """Matrix power M^e; columns renormalized to absorb float drift."""
    if e < 1:
        raise ValueError("expansion power must be >= 1")
    out = m.copy()
    for _ in range(e - 1):
        out = (out @ m).tocsc()
    out.sort_indices()
    return _normalize_columns(out)


def inflate(m: sp.csc_matrix, r: float = 2.0) -> sp.csc_matrix:
    """Entrywise power r followed by column renormalization (r >= 1)."""
    if r < 1.0:
        raise ValueError("inflation must be >= 1")
    out = m.copy().tocsc()
    out.data = out.data ** r
    return _normalize_columns(out)


def prune(m: sp.csc_matrix, threshold: float) -> sp.csc_matrix:
    """Drop entries below threshold, keep every column maximum, renormalize."""
    if threshold < 0:
        raise ValueError("prune threshold must be >= 0")
    out = m.copy().tocsc()
    if threshold == 0.0 or out.nnz == 0:
        return out
    colmax = np.asarray(out.max(axis=0).todense()).ravel()
    col_of = np.repeat(np.arange(out.shape[1], dtype=np.int64), np.diff(out.indptr))
    keep = (out.data >= threshold) | (out.data >= colmax[col_of])
    out.data = np.where(keep, out.data, 0.0)
    out.eliminate_zeros()
    return _normalize_columns(out)


def _max_abs_diff(a: sp.csc_matrix, b: sp.csc_matrix) -> float:
    d = (a - b).tocsc()
    return float(np.abs(d.data).max()) if d.nnz else 0.0


def mcl_flow(m: sp.csc_matrix, params: MclParams) -> Iterator[tuple[sp.csc_matrix, float]]:
    """Yield (matrix, max entry change) after each expand/inflate/prune cycle.

    Stops after the change falls below convergence_epsilon or after
    max_iterations cycles, whichever comes first.
    """
    current = m
    for _ in range(params.max_iterations):
        nxt = prune(inflate(expand(current, params.expansion), params.inflation),
                    params.prune_threshold)
        delta = _max_abs_diff(nxt, current)
        current = nxt
        yield current, delta
        if delta < params.convergence_epsilon:
            return


def interpret_limit(m: sp.csc_matrix) -> list[list[int]]:
    """Read clusters off a (near-)limit flow matrix.

    Attractors are the nodes with a positive diagonal entry. Attractors
    that attract one another form one attractor system (connected
    components over the attractor set); every node then joins the system
    of the attractor holding the largest entry in its column, ties going
    to the lowest attractor index. Nodes attracted by nothing (possible
    only for unconverged input) become singletons.
    """
    m = m.tocsc()
    m.sort_indices()
    n = m.shape[0]
    diag = m.diagonal()
    attractors = np.flatnonzero(diag > 0)
    if attractors.size == 0:
        return [[i] for i in range(n)]

    # union attractors that attract each other, in either direction
    parent = np.arange(n, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    is_attractor = np.zeros(n, dtype=bool)
    is_attractor[attractors] = True
    sub = m[attractors][:, attractors].tocoo()
    for i, j in zip(attractors[sub.row].tolist(), attractors[sub.col].tolist()):
        union(i, j)

    # per column: the attractor row with the largest entry, ties -> lowest row
    col_of = np.repeat(np.arange(n, dtype=np.int64), np.diff(m.indptr))
    mask = is_attractor[m.indices] & (m.data > 0)
    cols = col_of[mask]
    rows = m.indices[mask]
    vals = m.data[mask]
    order = np.lexsort((rows, -vals, cols))
    cols_sorted = cols[order]
    uniq_cols, first = np.unique(cols_sorted, return_index=True)
    winner = rows[order][first]

    assign = np.full(n, -1, dtype=np.int64)
    assign[uniq_cols] = [find(int(a)) for a in winner]
    groups: dict[int, list[int]] = {}
    for node in range(n):
        root = int(assign[node])
        if root < 0:
            groups[-node - 1] = [node]  # unattracted: singleton
        else:
            groups.setdefault(root, []).append(node)
    return sorted(groups.values(), key=lambda g: g[0])


def mcl_cluster(graph: CitationGraph, params: MclParams | None = None,
                dataset_label: str = "") -> Clustering:
    """Run the full MCL loop on a citation graph.

    Non-convergence within max_iterations is not an error: the current
    matrix is interpreted and the provenance carries converged=False.
    """
    params = params or MclParams()
    m = build_transition_matrix(graph)
    iterations = 0
    delta = np.inf
    for m, delta in mcl_flow(m, params):
        iterations += 1
    converged = bool(delta < params.convergence_epsilon)
    if not converged:
        log.warning("MCL did not converge in %d iterations (last change %.3g)",
                    iterations, delta)
    clusters = interpret_limit(m)
    prov = Provenance(engine="mcl", params=asdict(params), dataset=dataset_label,
                      iterations=iterations, converged=converged)
    return Clustering.from_member_sets(graph.node_ids, clusters, prov)
