"""Graph-topological cluster metrics: conductance, edge counts, citation scores."""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .clustering import Clustering
from .graphstore import CitationGraph


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class ClusterMetrics:
    cluster_id: int
    size: int
    internal_edges: int
    cut_edges: int
    conductance: float


@dataclass(frozen=True)
class MetricsSummary:
    n_clusters: int
    n_articles: int
    mean_size: float
    median_size: float
    mean_conductance: float


@dataclass(frozen=True)
class MetricsTable:
    rows: tuple[ClusterMetrics, ...]
    summary: MetricsSummary

    def by_id(self) -> dict[int, ClusterMetrics]:
        return {r.cluster_id: r for r in self.rows}


def _member_mask(graph: CitationGraph, members: Iterable[int]) -> np.ndarray:
    mask = np.zeros(graph.n_nodes, dtype=bool)
    idx = np.fromiter((int(m) for m in members), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= graph.n_nodes):
        raise MetricsError("member index out of range")
    mask[idx] = True
    return mask


def _cut_and_volumes(graph: CitationGraph, mask: np.ndarray) -> tuple[int, int, int]:
    u, v = graph.undirected_edges
    cut = int(np.count_nonzero(mask[u] != mask[v]))
    vol_s = int(graph.degrees[mask].sum())
    vol_rest = int(graph.degrees.sum()) - vol_s
    return cut, vol_s, vol_rest


def conductance(graph: CitationGraph, members: Iterable[int]) -> float:
    """cut(S) / min(vol(S), vol(V-S)) on the symmetrized graph; 0.0 if cut is 0.

    Raises for the empty set and for the full node set (both volumes of
    the complement degenerate).
    """
    mask = _member_mask(graph, members)
    size = int(mask.sum())
    if size == 0 or size == graph.n_nodes:
        raise MetricsError("conductance needs a proper nonempty node subset")
    cut, vol_s, vol_rest = _cut_and_volumes(graph, mask)
    if cut == 0:
        return 0.0
    return cut / min(vol_s, vol_rest)


def cut_edges(graph: CitationGraph, members: Iterable[int]) -> int:
    """Undirected edges of the symmetrized graph crossing the boundary."""
    mask = _member_mask(graph, members)
    return _cut_and_volumes(graph, mask)[0]


def internal_edges(graph: CitationGraph, members: Iterable[int]) -> int:
    """Directed citation edges with both endpoints in the member set."""
    mask = _member_mask(graph, members)
    u, v = graph.edge_arrays()
    return int(np.count_nonzero(mask[u] & mask[v]))


def weighted_citation_count(graph: CitationGraph, node: int) -> int:
    """In-graph citations received plus citations received by all neighbors.

    Neighbors are the union of in- and out-neighbors.
    """
    if node < 0 or node >= graph.n_nodes:
        raise MetricsError(f"unknown node index {node}")
    neighbors = np.union1d(graph.in_neighbors(node), graph.out_neighbors(node))
    indeg = graph.in_degrees()
    return int(indeg[node]) + int(indeg[neighbors].sum())


def metrics_table(graph: CitationGraph, clustering: Clustering) -> MetricsTable:
    """Per-cluster metrics plus the dataset-level summary row.

    Requires a partition. A cluster covering the whole graph has zero cut
    and scores conductance 0.0 by the zero-cut rule.
    """
    clustering.validate_partition()
    u, v = graph.edge_arrays()
    uu, uv = graph.undirected_edges
    labels = clustering.labels()
    internal_counts = np.zeros(clustering.n_clusters, dtype=np.int64)
    same = labels[u] == labels[v]
    np.add.at(internal_counts, labels[u[same]], 1)
    cut_counts = np.zeros(clustering.n_clusters, dtype=np.int64)
    cross = labels[uu] != labels[uv]
    np.add.at(cut_counts, labels[uu[cross]], 1)
    np.add.at(cut_counts, labels[uv[cross]], 1)
    vols = np.zeros(clustering.n_clusters, dtype=np.int64)
    np.add.at(vols, labels, graph.degrees)
    total_vol = int(graph.degrees.sum())

    rows = []
    for cid, members in enumerate(clustering.clusters):
        cut = int(cut_counts[cid])
        if cut == 0:
            cond = 0.0
        else:
            cond = cut / min(int(vols[cid]), total_vol - int(vols[cid]))
        rows.append(ClusterMetrics(cluster_id=cid, size=len(members),
                                   internal_edges=int(internal_counts[cid]),
                                   cut_edges=cut, conductance=cond))
    sizes = [r.size for r in rows]
    summary = MetricsSummary(
        n_clusters=len(rows),
        n_articles=graph.n_nodes,
        mean_size=statistics.fmean(sizes) if sizes else 0.0,
        median_size=float(statistics.median(sizes)) if sizes else 0.0,
        mean_conductance=statistics.fmean(r.conductance for r in rows) if rows else 0.0,
    )
    return MetricsTable(rows=tuple(rows), summary=summary)


METRICS_CSV_HEADER = ["cluster_id", "size", "internal_edges", "cut_edges", "conductance"]


def write_metrics_csv(table: MetricsTable, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_CSV_HEADER)
        for r in table.rows:
            w.writerow([r.cluster_id, r.size, r.internal_edges, r.cut_edges,
                        repr(r.conductance)])


def read_metrics_csv(path: str | Path) -> MetricsTable:
    rows = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_CSV_HEADER:
            raise MetricsError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            rows.append(ClusterMetrics(
                cluster_id=int(rec["cluster_id"]), size=int(rec["size"]),
                internal_edges=int(rec["internal_edges"]),
                cut_edges=int(rec["cut_edges"]),
                conductance=float(rec["conductance"])))
    sizes = [r.size for r in rows]
    summary = MetricsSummary(
        n_clusters=len(rows), n_articles=sum(sizes),
        mean_size=statistics.fmean(sizes) if sizes else 0.0,
        median_size=float(statistics.median(sizes)) if sizes else 0.0,
        mean_conductance=statistics.fmean(r.conductance for r in rows) if rows else 0.0)
    return MetricsTable(rows=tuple(rows), summary=summary)
