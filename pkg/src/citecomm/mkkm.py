"""Multilevel kernel k-means clustering minimizing normalized cut.

The scheme: coarsen the symmetrized graph by random-order heavy-edge
matching until it is small, cluster the coarsest graph by seeded
k-region growing, then walk the levels back up, projecting labels and
refining boundary nodes at every level. The refinement objective is the
sum over clusters of cut(c)/vol(c), whose per-cluster term is the
conductance numerator/denominator used elsewhere in the package.
"""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .clustering import Clustering, Provenance
from .graphstore import CitationGraph

log = logging.getLogger(__name__)


class WeightedGraph:
    """Undirected weighted graph in CSR form with integer node weights."""

    def __init__(self, n: int, u: np.ndarray, v: np.ndarray, w: np.ndarray,
                 node_weights: np.ndarray | None = None):
        """Build from unique undirected edges (u < v) and their weights."""
        self.n = int(n)
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.concatenate([w, w]).astype(np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, data = rows[order], cols[order], data[order]
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self.indptr, rows + 1, 1)
        np.cumsum(self.indptr, out=self.indptr)
        self.indices = cols
        self.weights = data
        self.node_weights = (node_weights if node_weights is not None
                             else np.ones(self.n, dtype=np.int64))
        self.degrees = np.zeros(self.n, dtype=np.float64)
        np.add.at(self.degrees, rows, data)

    @classmethod
    def from_citation_graph(cls, graph: CitationGraph) -> "WeightedGraph":
        u, v = graph.undirected_edges
        return cls(graph.n_nodes, u, v, np.ones(u.size, dtype=np.float64))

    @property
    def n_edges(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.indices[s:e], self.weights[s:e]

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unique undirected edges (u < v) with weights."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]


@dataclass(frozen=True)
class MkkmParams:
    k: int
    coarsen_until: int | None = None  # default 20 * k
    refine_iterations: int = 10
    seed: int = 0
    base_restarts: int = 8  # coarsest-level attempts, best normalized cut wins

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.refine_iterations < 0:
            raise ValueError("refine_iterations must be >= 0")
        if self.base_restarts < 1:
            raise ValueError("base_restarts must be >= 1")


@dataclass(frozen=True)
class CoarseLevel:
    graph: WeightedGraph
    mapping: np.ndarray  # fine node -> coarse node


def coarsen(graph: WeightedGraph, rng: np.random.Generator | None = None,
            order: Sequence[int] | None = None) -> CoarseLevel:
    """One level of random-order heavy-edge matching.

    Unmatched nodes are visited in seeded random order (or the explicit
    ``order``); each matches its unmatched neighbor of maximum edge
    weight, ties to the lowest index, or copies through if none is free.
    Coarse edge weights are the summed fine cross-edge weights; coarse
    node weights the summed fine node weights.
    """
    if graph.n < 2:
        raise ValueError("coarsening needs at least 2 nodes")
    if order is None:
        if rng is None:
            raise ValueError("coarsen needs an rng or an explicit visit order")
        order = rng.permutation(graph.n)
    mapping = np.full(graph.n, -1, dtype=np.int64)
    next_id = 0
    for node in order:
        node = int(node)
        if mapping[node] >= 0:
            continue
        nbrs, wts = graph.neighbors(node)
        best = -1
        best_w = 0.0
        for nb, w in zip(nbrs.tolist(), wts.tolist()):
            if mapping[nb] >= 0 or nb == node:
                continue
            if w > best_w or (w == best_w and (best == -1 or nb < best)):
                best = nb
                best_w = w
        mapping[node] = next_id
        if best >= 0:
            mapping[best] = next_id
        next_id += 1

    node_weights = np.zeros(next_id, dtype=np.int64)
    np.add.at(node_weights, mapping, graph.node_weights)
    u, v, w = graph.edge_list()
    cu, cv = mapping[u], mapping[v]
    cross = cu != cv
    lo = np.minimum(cu[cross], cv[cross])
    hi = np.maximum(cu[cross], cv[cross])
    key = lo * next_id + hi
    uniq, inv = np.unique(key, return_inverse=True)
    agg = np.zeros(uniq.size, dtype=np.float64)
    np.add.at(agg, inv, w[cross])
    coarse = WeightedGraph(next_id, uniq // next_id, uniq % next_id, agg,
                           node_weights=node_weights)
    return CoarseLevel(graph=coarse, mapping=mapping)


def _hop_distances(graph: WeightedGraph, sources: Sequence[int]) -> np.ndarray:
    dist = np.full(graph.n, np.inf)
    queue: deque[int] = deque()
    for s in sources:
        dist[s] = 0.0
        queue.append(int(s))
    while queue:
        x = queue.popleft()
        nxt = dist[x] + 1.0
        for nb in graph.neighbors(x)[0].tolist():
            if nxt < dist[nb]:
                dist[nb] = nxt
                queue.append(nb)
    return dist


def base_cluster(graph: WeightedGraph, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-region growing on the coarsest graph.

    Seeds are picked greedy-k-means++-style on shortest hop distance:
    the first uniformly, later ones from a handful of candidates drawn
    proportionally to squared distance to the nearest seed, keeping the
    candidate that most reduces the total squared distance. Nodes
    unreachable from every seed are preferred outright.
    Regions then grow round-robin, each attaching the unassigned node
    with the heaviest total connection to it; nodes connected to no
    region go to the currently smallest region.
    """
    n = graph.n
    if n < k:
        log.warning("base clustering asked for k=%d on %d nodes; padding with "
                    "%d singleton cluster(s)", k, n, k - n)
        return np.arange(n, dtype=np.int64)
    seeds = [int(rng.integers(n))]
    dist = _hop_distances(graph, seeds)
    trials = 2 + int(np.log(max(k, 2)))  # greedy k-means++ candidate count
    cap = float(n)  # finite stand-in for unreachable when comparing potentials
    while len(seeds) < k:
        unreachable = np.flatnonzero(np.isinf(dist))
        if unreachable.size:
            candidates = unreachable[rng.integers(unreachable.size, size=trials)]
        else:
            weights = dist ** 2
            total = weights.sum()
            if total <= 0:  # every node already a seed neighbor at distance 0
                candidates = rng.integers(n, size=trials)
            else:
                candidates = rng.choice(n, size=trials, p=weights / total)
        best_pick = -1
        best_potential = np.inf
        best_dist = dist
        for cand in candidates.tolist():
            newdist = np.minimum(dist, _hop_distances(graph, [int(cand)]))
            potential = float(np.square(np.minimum(newdist, cap)).sum())
            if potential < best_potential:
                best_potential = potential
                best_pick = int(cand)
                best_dist = newdist
        seeds.append(best_pick)
        dist = best_dist

    labels = np.full(n, -1, dtype=np.int64)
    sizes = np.zeros(k, dtype=np.int64)
    for r, s in enumerate(seeds):
        labels[s] = r
        sizes[r] += 1
    # connection weight of each unassigned node to each region, grown lazily;
    # regions take turns so no single region can snowball the whole graph
    conn: list[dict[int, float]] = [dict() for _ in range(n)]
    heaps: list[list[tuple[float, int]]] = [[] for _ in range(k)]

    def absorb(node: int) -> None:
        region = int(labels[node])
        nbrs, wts = graph.neighbors(node)
        for nb, w in zip(nbrs.tolist(), wts.tolist()):
            if labels[nb] >= 0:
                continue
            c = conn[nb].get(region, 0.0) + w
            conn[nb][region] = c
            heapq.heappush(heaps[region], (-c, nb))

    for s in seeds:
        absorb(int(s))
    unassigned = n - k
    while unassigned:
        attached = False
        for region in range(k):
            heap = heaps[region]
            while heap:
                negw, node = heapq.heappop(heap)
                if labels[node] >= 0 or conn[node].get(region) != -negw:
                    continue  # stale entry
                labels[node] = region
                sizes[region] += 1
                unassigned -= 1
                absorb(node)
                attached = True
                break
        if not attached:
            break  # nothing reachable from any region
    if unassigned:
        for node in np.flatnonzero(labels < 0).tolist():
            region = int(np.argmin(sizes))
            labels[node] = region
            sizes[region] += 1
    return labels


def normalized_cut(graph: WeightedGraph, labels: np.ndarray) -> float:
    """Sum over clusters of cut(c)/vol(c); empty-volume terms count 0."""
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if labels.size else 0
    cut = np.zeros(k, dtype=np.float64)
    u, v, w = graph.edge_list()
    cross = labels[u] != labels[v]
    np.add.at(cut, labels[u[cross]], w[cross])
    np.add.at(cut, labels[v[cross]], w[cross])
    vol = np.zeros(k, dtype=np.float64)
    np.add.at(vol, labels, graph.degrees)
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(vol > 0, cut / np.where(vol > 0, vol, 1.0), 0.0)
    return float(terms.sum())


def refine(graph: WeightedGraph, labels: np.ndarray, iterations: int) -> np.ndarray:
    """Boundary-node sweeps that greedily decrease normalized cut.

    Each sweep visits nodes in index order; a node moves to the adjacent
    cluster giving the largest strict decrease of the objective, computed
    incrementally from cluster cut/volume deltas. A move never empties a
    cluster. Stops after ``iterations`` sweeps or a sweep with no moves.
    """
    labels = np.asarray(labels, dtype=np.int64).copy()
    if iterations == 0 or graph.n == 0:
        return labels
    k = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    vol = np.zeros(k, dtype=np.float64)
    np.add.at(vol, labels, graph.degrees)
    cut = np.zeros(k, dtype=np.float64)
    u, v, w = graph.edge_list()
    cross = labels[u] != labels[v]
    np.add.at(cut, labels[u[cross]], w[cross])
    np.add.at(cut, labels[v[cross]], w[cross])

    def term(c: float, vo: float) -> float:
        return c / vo if vo > 0 else 0.0

    previous_objective = normalized_cut(graph, labels)
    for _ in range(iterations):
        moved = 0
        for node in range(graph.n):
            c1 = int(labels[node])
            if sizes[c1] <= 1:
                continue
            nbrs, wts = graph.neighbors(node)
            wt: dict[int, float] = {}
            for nb, wgt in zip(nbrs.tolist(), wts.tolist()):
                lab = int(labels[nb])
                wt[lab] = wt.get(lab, 0.0) + wgt
            if all(lab == c1 for lab in wt):
                continue
            d = float(graph.degrees[node])
            w1 = wt.get(c1, 0.0)
            base = term(cut[c1], vol[c1])
            best_delta = -1e-12
            best_target = -1
            for c2 in sorted(lab for lab in wt if lab != c1):
                new_cut1 = cut[c1] - d + 2.0 * w1
                new_cut2 = cut[c2] + d - 2.0 * wt[c2]
                delta = (term(new_cut1, vol[c1] - d) + term(new_cut2, vol[c2] + d)
                         - base - term(cut[c2], vol[c2]))
                if delta < best_delta:
                    best_delta = delta
                    best_target = c2
            if best_target < 0:
                continue
            c2 = best_target
            cut[c1] = cut[c1] - d + 2.0 * w1
            cut[c2] = cut[c2] + d - 2.0 * wt[c2]
            vol[c1] -= d
            vol[c2] += d
            sizes[c1] -= 1
            sizes[c2] += 1
            labels[node] = c2
            moved += 1
        objective = normalized_cut(graph, labels)
        if objective > previous_objective + 1e-9:
            raise RuntimeError(
                f"refinement sweep increased normalized cut: "
                f"{previous_objective:.12f} -> {objective:.12f}")
        previous_objective = objective
        if moved == 0:
            break
    return labels


def mkkm_cluster(graph: CitationGraph, params: MkkmParams,
                 dataset_label: str = "") -> Clustering:
    """Full multilevel pipeline on a citation graph (symmetrized)."""
    rng = np.random.default_rng(params.seed)
    g0 = WeightedGraph.from_citation_graph(graph)
    limit = params.coarsen_until if params.coarsen_until is not None else 20 * params.k
    limit = max(limit, 2 * params.k, 2)
    levels = [g0]
    mappings: list[np.ndarray] = []
    while levels[-1].n > limit and levels[-1].n_edges > 0:
        level = coarsen(levels[-1], rng)
        if level.graph.n == levels[-1].n:
            break
        levels.append(level.graph)
        mappings.append(level.mapping)

    # the base step is cheap on the coarsest graph and sensitive to seed
    # placement, so take the best of a few restarts by normalized cut
    labels = None
    best_objective = np.inf
    for child_seed in rng.integers(0, 2**63 - 1, size=params.base_restarts).tolist():
        child = np.random.default_rng(child_seed)
        attempt = base_cluster(levels[-1], params.k, child)
        attempt = refine(levels[-1], attempt, params.refine_iterations)
        objective = normalized_cut(levels[-1], attempt)
        if objective < best_objective:
            best_objective = objective
            labels = attempt
    for fine, mapping in zip(reversed(levels[:-1]), reversed(mappings)):
        labels = labels[mapping]
        labels = refine(fine, labels, params.refine_iterations)

    prov = Provenance(engine="mkkm", params=asdict(params), dataset=dataset_label)
    return Clustering.from_labels(graph.node_ids, labels, prov)


def choose_k(mcl_clustering: Clustering) -> int:
    """Target cluster count: half the MCL cluster count, rounded up."""
    return max(1, -(-mcl_clustering.n_clusters // 2))
