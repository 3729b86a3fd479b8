"""Cluster pairing across clusterings by overlap, plus selection filters.

Matching works on pub_id sets, so clusterings over different node
universes (a year-slice versus the combined dataset) compare correctly:
nodes absent from the target universe simply cannot intersect.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import AbstractSet, Iterable, Mapping, Sequence

from .clustering import Clustering
from .metrics import ClusterMetrics


class MatchingError(Exception):
    pass


@dataclass(frozen=True)
class ClusterMatch:
    source_cluster_id: int
    target_label: str
    target_cluster_id: int
    intersection: int
    jaccard: float
    proportion: float  # |intersection| / |source|


@dataclass(frozen=True)
class SelectionCriteria:
    """Size bounds inclusive; conductance at most; jaccard strictly greater."""

    min_size: int = 30
    max_size: int = 350
    max_conductance: float = 0.5
    min_jaccard: float = 0.9

    def __post_init__(self) -> None:
        if self.min_size > self.max_size:
            raise ValueError("min_size must be <= max_size")


def jaccard(a: AbstractSet[str], b: AbstractSet[str]) -> float:
    if not a and not b:
        return 0.0
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)


def _target_items(targets) -> list[tuple[str, Clustering]]:
    if isinstance(targets, Clustering):
        return [(targets.provenance.dataset or targets.provenance.engine, targets)]
    return sorted(targets.items(), key=lambda kv: kv[0])


def best_match(source: AbstractSet[str], targets, source_id: int = -1) -> ClusterMatch:
    """The target cluster with the largest intersection with ``source``.

    Ties break by larger jaccard, then lexicographic target label, then
    lowest target cluster id. With no intersecting target cluster the
    match has intersection 0, jaccard 0.0, target id -1.
    """
    if not source:
        raise MatchingError("source cluster is empty")
    best: tuple[int, float, str, int] | None = None
    for label, clustering in _target_items(targets):
        for cid in range(clustering.n_clusters):
            target_set = clustering.pubids(cid)
            inter = len(source & target_set)
            if inter == 0:
                continue
            jc = inter / (len(source) + len(target_set) - inter)
            key = (-inter, -jc, label, cid)
            if best is None or key < (-best[0], -best[1], best[2], best[3]):
                best = (inter, jc, label, cid)
    if best is None:
        return ClusterMatch(source_cluster_id=source_id, target_label="",
                            target_cluster_id=-1, intersection=0,
                            jaccard=0.0, proportion=0.0)
    inter, jc, label, cid = best
    return ClusterMatch(source_cluster_id=source_id, target_label=label,
                        target_cluster_id=cid, intersection=inter,
                        jaccard=jc, proportion=inter / len(source))


def match_all(source: Clustering, targets) -> list[ClusterMatch]:
    """best_match for every source cluster, via an inverted pub_id index."""
    items = _target_items(targets)
    index: dict[str, list[tuple[str, int]]] = {}
    sizes: dict[tuple[str, int], int] = {}
    for label, clustering in items:
        for cid in range(clustering.n_clusters):
            members = clustering.pubids(cid)
            sizes[(label, cid)] = len(members)
            for p in members:
                index.setdefault(p, []).append((label, cid))
    out = []
    for sid in range(source.n_clusters):
        sset = source.pubids(sid)
        counts: dict[tuple[str, int], int] = {}
        for p in sset:
            for key in index.get(p, ()):
                counts[key] = counts.get(key, 0) + 1
        best = None
        for (label, cid), inter in counts.items():
            jc = inter / (len(sset) + sizes[(label, cid)] - inter)
            key = (-inter, -jc, label, cid)
            if best is None or key < best[0]:
                best = (key, ClusterMatch(source_cluster_id=sid, target_label=label,
                                          target_cluster_id=cid, intersection=inter,
                                          jaccard=jc, proportion=inter / len(sset)))
        if best is None:
            out.append(ClusterMatch(source_cluster_id=sid, target_label="",
                                    target_cluster_id=-1, intersection=0,
                                    jaccard=0.0, proportion=0.0))
        else:
            out.append(best[1])
    return out


def select_candidates(mcl: Clustering, metrics: Mapping[int, ClusterMetrics],
                      matches: Mapping[int, ClusterMatch] | Sequence[ClusterMatch],
                      criteria: SelectionCriteria) -> list[int]:
    """Cluster ids passing size, conductance and best-match jaccard filters.

    Size bounds inclusive, conductance <= max, jaccard strictly > min;
    result in ascending cluster id. Metrics and matches must cover every
    cluster of ``mcl``.
    """
    if not isinstance(matches, Mapping):
        matches = {m.source_cluster_id: m for m in matches}
    selected = []
    for cid in range(mcl.n_clusters):
        if cid not in metrics or cid not in matches:
            raise MatchingError(f"metrics/matches missing cluster {cid}")
        m = metrics[cid]
        match = matches[cid]
        if (criteria.min_size <= m.size <= criteria.max_size
                and m.conductance <= criteria.max_conductance
                and match.jaccard > criteria.min_jaccard):
            selected.append(cid)
    return selected


MATCHES_CSV_HEADER = ["source_id", "target_label", "target_id",
                      "intersection", "jaccard", "proportion"]


def write_matches_csv(matches: Iterable[ClusterMatch], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MATCHES_CSV_HEADER)
        for m in matches:
            w.writerow([m.source_cluster_id, m.target_label, m.target_cluster_id,
                        m.intersection, repr(m.jaccard), repr(m.proportion)])


def read_matches_csv(path: str | Path) -> list[ClusterMatch]:
    out = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MATCHES_CSV_HEADER:
            raise MatchingError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            out.append(ClusterMatch(
                source_cluster_id=int(rec["source_id"]),
                target_label=rec["target_label"],
                target_cluster_id=int(rec["target_id"]),
                intersection=int(rec["intersection"]),
                jaccard=float(rec["jaccard"]),
                proportion=float(rec["proportion"])))
    return out
