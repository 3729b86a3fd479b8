"""Shared clustering representation plus TSV/JSON persistence.

A clustering is a partition of a graph's nodes. Clusters are stored as
sorted index tuples ordered by their smallest member, which makes every
engine's output deterministic and diff-able. The on-disk format is the
two-column TSV ``cluster_id<TAB>pub_id`` with a JSON provenance sidecar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class ClusteringError(Exception):
    pass


@dataclass(frozen=True)
class Provenance:
    """Where a clustering came from: engine, parameters, dataset label."""

    engine: str
    params: Mapping[str, object] = field(default_factory=dict)
    dataset: str = ""
    iterations: int | None = None
    converged: bool | None = None

    def to_json(self) -> dict:
        return {
            "engine": self.engine,
            "params": dict(self.params),
            "dataset": self.dataset,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class Clustering:
    """A partition of graph nodes produced by one engine."""

    node_ids: tuple[str, ...]
    clusters: tuple[tuple[int, ...], ...]
    provenance: Provenance

    @classmethod
    def from_labels(cls, node_ids: Sequence[str], labels: Sequence[int],
                    provenance: Provenance) -> "Clustering":
        """Group nodes by label; clusters ordered by smallest member index."""
        labels = np.asarray(labels)
        if len(labels) != len(node_ids):
            raise ClusteringError("labels length does not match node count")
        groups: dict[int, list[int]] = {}
        for i, lab in enumerate(labels.tolist()):
            groups.setdefault(lab, []).append(i)
        ordered = sorted(groups.values(), key=lambda m: m[0])
        return cls(tuple(node_ids), tuple(tuple(m) for m in ordered), provenance)

    @classmethod
    def from_member_sets(cls, node_ids: Sequence[str],
                         member_sets: Iterable[Iterable[int]],
                         provenance: Provenance) -> "Clustering":
        clusters = sorted((tuple(sorted(set(m))) for m in member_sets),
                          key=lambda c: c[0] if c else -1)
        return cls(tuple(node_ids), tuple(clusters), provenance)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]

    def members(self, cluster_id: int) -> tuple[int, ...]:
        return self.clusters[cluster_id]

    def pubids(self, cluster_id: int) -> frozenset[str]:
        return frozenset(self.node_ids[i] for i in self.clusters[cluster_id])

    def pubid_sets(self) -> list[frozenset[str]]:
        return [self.pubids(i) for i in range(self.n_clusters)]

    def labels(self) -> np.ndarray:
        """Node index -> cluster id array (requires a valid partition)."""
        out = np.full(len(self.node_ids), -1, dtype=np.int64)
        for cid, members in enumerate(self.clusters):
            out[list(members)] = cid
        return out

    def validate_partition(self) -> None:
        """Raise unless clusters are disjoint and cover all nodes."""
        seen: set[int] = set()
        total = 0
        for members in self.clusters:
            total += len(members)
            seen.update(members)
        if total != len(self.node_ids) or seen != set(range(len(self.node_ids))):
            raise ClusteringError("clusters do not form a partition of the nodes")


# -- persistence (TSV body + JSON provenance sidecar) -------------------


def provenance_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def write_clustering(clustering: Clustering, path: str | Path) -> None:
    """Write ``cluster_id<TAB>pub_id`` TSV plus the provenance sidecar."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for cid, members in enumerate(clustering.clusters):
            for m in members:
                fh.write(f"{cid}\t{clustering.node_ids[m]}\n")
    sidecar = clustering.provenance.to_json()
    sidecar["n_clusters"] = clustering.n_clusters
    sidecar["n_nodes"] = len(clustering.node_ids)
    provenance_path(path).write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_cluster_table(path: str | Path) -> list[list[str]]:
    """Read a clustering TSV as pub_id lists, in first-appearance order."""
    path = Path(path)
    groups: dict[str, list[str]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ClusteringError(f"{path}:{lineno}: expected 2 fields")
            groups.setdefault(fields[0], []).append(fields[1])
    return list(groups.values())


def clustering_from_table(path: str | Path, label: str = "") -> Clustering:
    """Load a clustering TSV over its own pub_id universe.

    Useful when no graph is at hand (e.g. pure matching): the node
    universe is exactly the pub_ids in the file, in appearance order.
    """
    groups = read_cluster_table(path)
    node_ids: list[str] = []
    seen: set[str] = set()
    member_sets: list[list[int]] = []
    index: dict[str, int] = {}
    for pubs in groups:
        members = []
        for p in pubs:
            if p in seen:
                raise ClusteringError(f"{path}: pub_id {p!r} in two clusters")
            seen.add(p)
            index[p] = len(node_ids)
            node_ids.append(p)
            members.append(index[p])
        member_sets.append(members)
    prov = Provenance(engine="file", dataset=label or str(path))
    return Clustering.from_member_sets(node_ids, member_sets, prov)


def read_clustering(path: str | Path, node_ids: Sequence[str],
                    provenance: Provenance | None = None) -> Clustering:
    """Bind a clustering TSV to a node universe.

    Nodes of the universe absent from the file become singletons so the
    result is always a partition; unknown pub_ids raise.
    """
    index = {p: i for i, p in enumerate(node_ids)}
    member_sets: list[list[int]] = []
    assigned: set[int] = set()
    for pubs in read_cluster_table(path):
        members = []
        for p in pubs:
            if p not in index:
                raise ClusteringError(f"{path}: pub_id {p!r} not in the node universe")
            members.append(index[p])
        member_sets.append(members)
        assigned.update(members)
    for i in range(len(node_ids)):
        if i not in assigned:
            member_sets.append([i])
    prov = provenance or Provenance(engine="file", dataset=str(path))
    return Clustering.from_member_sets(node_ids, member_sets, prov)
