"""Author-community profiles and degenerate-cluster classification.

A selected article cluster becomes a community profile: per-author
publication counts, participation statistics and the citation density
among the most productive authors. Clusters whose citation structure is
dominated by a single hub (citing or cited) or by a lone article with
heavy external traffic are flagged as edge cases and filtered out.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphstore import CitationGraph, PubRecord


class CommunityError(Exception):
    pass


class EdgeCase(str, Enum):
    HUB_CITED = "HubCited"
    HUB_CITING = "HubCiting"
    SINGLETON_HIGH_EXTERNAL = "SingletonHighExternal"
    NORMAL = "Normal"


@dataclass(frozen=True)
class EdgeCaseThresholds:
    external_threshold: int = 50
    hub_fraction: float = 0.9


@dataclass(frozen=True)
class EdgeCaseResult:
    label: EdgeCase
    size: int
    external_edges: int
    max_intra_citing: int  # most other members cited by a single member
    max_intra_cited: int   # most other members citing a single member


@dataclass(frozen=True)
class CommunityProfile:
    cluster_id: int
    size: int
    authors: Mapping[str, int]          # author -> publications in cluster
    one_paper_fraction: float
    p95_range: int                      # publication count at the 95th percentile
    p99_range: int
    top_author_citation_density: float  # ordered pairs of p95 authors where one cites the other
    authorless_articles: int
    no_author_data: bool

    def to_json(self) -> dict:
        out = asdict(self)
        out["authors"] = dict(sorted(self.authors.items()))
        return out


def _nearest_rank(sorted_values: Sequence[int], percentile: float) -> int:
    rank = max(1, math.ceil(percentile / 100.0 * len(sorted_values)))
    return int(sorted_values[rank - 1])


def build_profile(cluster: Iterable[int], records: Mapping[str, PubRecord],
                  graph: CitationGraph, cluster_id: int = -1) -> CommunityProfile:
    """Author statistics for one article cluster (node indices)."""
    members = sorted(set(int(m) for m in cluster))
    if not members:
        raise CommunityError("cluster is empty")
    counts: Counter = Counter()
    papers_of: dict[str, list[int]] = {}
    authorless = 0
    for node in members:
        pub_id = graph.node_ids[node]
        rec = records.get(pub_id)
        if rec is None:
            raise CommunityError(f"no record for cluster member {pub_id!r}")
        if not rec.author_ids:
            authorless += 1
            continue
        for author in rec.author_ids:
            counts[author] += 1
            papers_of.setdefault(author, []).append(node)
    if not counts:
        return CommunityProfile(
            cluster_id=cluster_id, size=len(members), authors={}, one_paper_fraction=0.0,
            p95_range=0, p99_range=0, top_author_citation_density=0.0,
            authorless_articles=authorless, no_author_data=True)

    sorted_counts = sorted(counts.values())
    one_paper = sum(1 for c in counts.values() if c == 1) / len(counts)
    p95 = _nearest_rank(sorted_counts, 95.0)
    p99 = _nearest_rank(sorted_counts, 99.0)
    top_authors = sorted(a for a, c in counts.items() if c >= p95)
    density = _citation_density(top_authors, papers_of, graph, set(members))
    return CommunityProfile(
        cluster_id=cluster_id, size=len(members), authors=dict(counts),
        one_paper_fraction=one_paper, p95_range=p95, p99_range=p99,
        top_author_citation_density=density, authorless_articles=authorless,
        no_author_data=False)


def _citation_density(authors: Sequence[str], papers_of: Mapping[str, list[int]],
                      graph: CitationGraph, member_set: set[int]) -> float:
    if len(authors) < 2:
        return 0.0
    cites: set[tuple[str, str]] = set()
    author_of_paper: dict[int, list[str]] = {}
    for a in authors:
        for p in papers_of[a]:
            author_of_paper.setdefault(p, []).append(a)
    for u in author_of_paper:
        targets = [v for v in graph.out_neighbors(u).tolist() if v in member_set]
        for v in targets:
            if v not in author_of_paper:
                continue
            for a in author_of_paper[u]:
                for b in author_of_paper[v]:
                    if a != b:
                        cites.add((a, b))
    ordered_pairs = len(authors) * (len(authors) - 1)
    return len(cites) / ordered_pairs


@dataclass(frozen=True)
class AuthorDistributionSummary:
    n_authors: int
    fraction_one: float
    fraction_le5: float
    mean_clusters: float
    max_clusters: int

    def to_json(self) -> dict:
        return asdict(self)


def author_cluster_distribution(
        cluster_pubid_sets: Iterable[Iterable[str]],
        records: Mapping[str, PubRecord]) -> tuple[dict[str, int], AuthorDistributionSummary]:
    """Distinct-cluster count per author over disjoint article clusters."""
    counts: Counter = Counter()
    for cluster in cluster_pubid_sets:
        authors_here: set[str] = set()
        for pub_id in cluster:
            rec = records.get(pub_id)
            if rec is not None:
                authors_here.update(rec.author_ids)
        for a in authors_here:
            counts[a] += 1
    if not counts:
        return {}, AuthorDistributionSummary(0, 0.0, 0.0, 0.0, 0)
    values = np.array(sorted(counts.values()), dtype=np.int64)
    summary = AuthorDistributionSummary(
        n_authors=len(counts),
        fraction_one=float(np.mean(values == 1)),
        fraction_le5=float(np.mean(values <= 5)),
        mean_clusters=float(values.mean()),
        max_clusters=int(values.max()),
    )
    return dict(counts), summary


def classify_edge_case(cluster: Iterable[int], graph: CitationGraph,
                       thresholds: EdgeCaseThresholds | None = None) -> EdgeCaseResult:
    """Label a cluster by precedence: singleton-high-external, hub-citing,
    hub-cited, normal.

    Hub rules need size >= 2: a single member citing (or cited by) at
    least ``hub_fraction`` of the other members triggers the label.
    """
    thresholds = thresholds or EdgeCaseThresholds()
    members = sorted(set(int(m) for m in cluster))
    if not members:
        raise CommunityError("cluster is empty")
    member_set = set(members)
    size = len(members)
    u, v = graph.edge_arrays()
    mask = np.zeros(graph.n_nodes, dtype=bool)
    mask[members] = True
    external = int(np.count_nonzero(mask[u] != mask[v]))
    max_citing = 0
    max_cited = 0
    for node in members:
        citing = sum(1 for x in graph.out_neighbors(node).tolist() if x in member_set)
        cited = sum(1 for x in graph.in_neighbors(node).tolist() if x in member_set)
        max_citing = max(max_citing, citing)
        max_cited = max(max_cited, cited)

    if size == 1 and external >= thresholds.external_threshold:
        label = EdgeCase.SINGLETON_HIGH_EXTERNAL
    elif size >= 2 and max_citing >= thresholds.hub_fraction * (size - 1):
        label = EdgeCase.HUB_CITING
    elif size >= 2 and max_cited >= thresholds.hub_fraction * (size - 1):
        label = EdgeCase.HUB_CITED
    else:
        label = EdgeCase.NORMAL
    return EdgeCaseResult(label=label, size=size, external_edges=external,
                          max_intra_citing=max_citing, max_intra_cited=max_cited)


def filter_communities(
        profiles: Mapping[int, CommunityProfile],
        labels: Mapping[int, EdgeCaseResult],
) -> tuple[list[tuple[int, CommunityProfile]], list[tuple[int, str]]]:
    """Keep profiles labelled Normal; list rejected ids with their label."""
    accepted = []
    rejected = []
    for cid in sorted(profiles):
        if cid not in labels:
            raise CommunityError(f"no edge-case label for cluster {cid}")
        if labels[cid].label is EdgeCase.NORMAL:
            accepted.append((cid, profiles[cid]))
        else:
            rejected.append((cid, labels[cid].label.value))
    return accepted, rejected


def write_profiles_jsonl(profiles: Mapping[int, CommunityProfile],
                         labels: Mapping[int, EdgeCaseResult],
                         path: str | Path) -> None:
    """One community per line with its edge-case label and accept flag."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for cid in sorted(profiles):
            row = profiles[cid].to_json()
            row["cluster_id"] = cid
            label = labels.get(cid)
            row["edge_case"] = label.label.value if label else None
            row["accepted"] = bool(label and label.label is EdgeCase.NORMAL)
            fh.write(json.dumps(row, sort_keys=True) + "\n")
