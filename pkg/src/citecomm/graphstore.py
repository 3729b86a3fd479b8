"""Data model, file ingestion and dataset assembly for citation graphs.

Edge files are TSV lines ``citing<TAB>cited`` (``#`` comments and blank
lines allowed). Metadata files are JSON-lines, one publication per line
with keys ``pub_id``, ``slice``, ``title``, ``abstract``, ``author_ids``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)


class GraphStoreError(Exception):
    """Base class for ingestion and dataset assembly failures."""


class EdgeFileError(GraphStoreError):
    pass


class MetadataError(GraphStoreError):
    pass


@dataclass(frozen=True)
class PubRecord:
    """One publication: identifier, slice label, optional text, authors."""

    pub_id: str
    slice: int | str
    title: str | None = None
    abstract: str | None = None
    author_ids: frozenset[str] = frozenset()

    def has_text(self) -> bool:
        return self.title is not None or self.abstract is not None


@dataclass(frozen=True)
class IngestStats:
    """Counters reported by load_edges."""

    lines: int = 0
    edges: int = 0
    dropped_self_loops: int = 0
    dropped_duplicates: int = 0


class CitationGraph:
    """Directed citation graph over dense node indices.

    Node identifiers are opaque strings mapped to dense integer indices in
    first-appearance order; adjacency is kept in CSR form in both
    directions so that in_edges is always the exact transpose of
    out_edges. Instances are immutable after construction and safe to
    share across threads.
    """

    def __init__(self, node_ids: Sequence[str], citing: np.ndarray, cited: np.ndarray,
                 ingest_stats: IngestStats | None = None):
        """Build from parallel arrays of edge endpoints (node indices).

        The arrays must already be deduplicated and free of self-loops;
        use :meth:`from_pairs` for raw identifier pairs.
        """
        n = len(node_ids)
        self.node_ids: tuple[str, ...] = tuple(node_ids)
        self._index: dict[str, int] = {p: i for i, p in enumerate(self.node_ids)}
        if len(self._index) != n:
            raise GraphStoreError("duplicate node identifiers")
        citing = np.asarray(citing, dtype=np.int64)
        cited = np.asarray(cited, dtype=np.int64)
        if citing.shape != cited.shape:
            raise GraphStoreError("edge endpoint arrays differ in length")
        self._out_indptr, self._out_indices = _build_csr(n, citing, cited)
        self._in_indptr, self._in_indices = _build_csr(n, cited, citing)
        self.ingest_stats = ingest_stats

    # -- construction ------------------------------------------------

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]],
                   node_ids: Sequence[str] | None = None) -> "CitationGraph":
        """Build from (citing_id, cited_id) pairs.

        Self-loops are dropped and duplicates collapsed, both counted in
        ``ingest_stats``. Extra identifiers in ``node_ids`` become
        isolated nodes; identifiers seen only in pairs are appended in
        first-appearance order.
        """
        index: dict[str, int] = {}
        if node_ids is not None:
            for p in node_ids:
                index.setdefault(p, len(index))
        us: list[int] = []
        vs: list[int] = []
        self_loops = 0
        for a, b in pairs:
            if a == b:
                self_loops += 1
                index.setdefault(a, len(index))
                continue
            ia = index.setdefault(a, len(index))
            ib = index.setdefault(b, len(index))
            us.append(ia)
            vs.append(ib)
        u = np.asarray(us, dtype=np.int64)
        v = np.asarray(vs, dtype=np.int64)
        u, v, dups = _dedupe_edges(u, v)
        stats = IngestStats(lines=len(us) + self_loops, edges=len(u),
                            dropped_self_loops=self_loops, dropped_duplicates=dups)
        if self_loops:
            log.warning("dropped %d self-loop edge(s)", self_loops)
        if dups:
            log.debug("collapsed %d duplicate edge(s)", dups)
        ids = list(index)
        return cls(ids, u, v, ingest_stats=stats)

    def with_edges(self, citing: np.ndarray, cited: np.ndarray) -> "CitationGraph":
        """Same node universe, different edges (used by the null model)."""
        return CitationGraph(self.node_ids, citing, cited)

    # -- basic accessors ----------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return int(self._out_indices.size)

    def index_of(self, pub_id: str) -> int:
        try:
            return self._index[pub_id]
        except KeyError:
            raise GraphStoreError(f"unknown node id: {pub_id!r}") from None

    def __contains__(self, pub_id: str) -> bool:
        return pub_id in self._index

    def out_neighbors(self, i: int) -> np.ndarray:
        return self._out_indices[self._out_indptr[i]:self._out_indptr[i + 1]]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self._in_indices[self._in_indptr[i]:self._in_indptr[i + 1]]

    def out_degree(self, i: int) -> int:
        return int(self._out_indptr[i + 1] - self._out_indptr[i])

    def in_degree(self, i: int) -> int:
        return int(self._in_indptr[i + 1] - self._in_indptr[i])

    def has_edge(self, u: int, v: int) -> bool:
        row = self.out_neighbors(u)
        k = np.searchsorted(row, v)
        return k < row.size and row[k] == v

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """All directed edges as (citing, cited) index arrays, sorted."""
        citing = np.repeat(np.arange(self.n_nodes, dtype=np.int64),
                           np.diff(self._out_indptr))
        return citing, self._out_indices.copy()

    def iter_edges(self) -> Iterator[tuple[int, int]]:
        u, v = self.edge_arrays()
        return zip(u.tolist(), v.tolist())

    def in_degrees(self) -> np.ndarray:
        return np.diff(self._in_indptr)

    def out_degrees(self) -> np.ndarray:
        return np.diff(self._out_indptr)

    # -- symmetrized view ---------------------------------------------

    @cached_property
    def undirected_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges (u < v) of the symmetrized graph."""
        a, b = self.edge_arrays()
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        key = lo * self.n_nodes + hi
        uniq = np.unique(key)
        return uniq // self.n_nodes, uniq % self.n_nodes

    @cached_property
    def degrees(self) -> np.ndarray:
        """Degrees on the symmetrized simple graph."""
        u, v = self.undirected_edges
        d = np.zeros(self.n_nodes, dtype=np.int64)
        np.add.at(d, u, 1)
        np.add.at(d, v, 1)
        return d

    def validate(self) -> None:
        """Check transpose consistency and absence of loops/duplicates."""
        u, v = self.edge_arrays()
        if np.any(u == v):
            raise GraphStoreError("self-loop present")
        if np.unique(u * self.n_nodes + v).size != u.size:
            raise GraphStoreError("duplicate edge present")
        out_set = set(zip(u.tolist(), v.tolist()))
        in_u = np.repeat(np.arange(self.n_nodes, dtype=np.int64), np.diff(self._in_indptr))
        in_set = set(zip(self._in_indices.tolist(), in_u.tolist()))
        if out_set != in_set:
            raise GraphStoreError("in_edges is not the transpose of out_edges")

    def __repr__(self) -> str:
        return f"CitationGraph(nodes={self.n_nodes}, edges={self.n_edges})"


def _build_csr(n: int, rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, cols


def _dedupe_edges(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    if u.size == 0:
        return u, v, 0
    n = int(max(u.max(), v.max())) + 1
    key = u * n + v
    uniq = np.unique(key)
    dups = int(u.size - uniq.size)
    return uniq // n, uniq % n, dups


# -- file ingestion ----------------------------------------------------


def load_edges(path: str | Path) -> CitationGraph:
    """Load a TSV edge file (``citing<TAB>cited`` per line).

    Comment lines starting with ``#`` and blank lines are skipped.
    Duplicate edges are collapsed and self-loops dropped, both counted in
    the returned graph's ``ingest_stats``. An empty file yields an empty
    graph. Malformed lines raise :class:`EdgeFileError` with the line
    number.
    """
    path = Path(path)

    def _pairs() -> Iterator[tuple[str, str]]:
        with path.open(encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n").rstrip("\r")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 2 or not fields[0] or not fields[1]:
                    raise EdgeFileError(f"{path}:{lineno}: expected 2 tab-separated fields")
                yield fields[0], fields[1]

    return CitationGraph.from_pairs(_pairs())


_META_KEYS = ("pub_id", "slice", "title", "abstract", "author_ids")


def load_metadata(path: str | Path) -> dict[str, PubRecord]:
    """Load publication metadata from a JSON-lines file.

    Missing or null title/abstract are preserved as absent. Unknown keys
    are ignored; a duplicate pub_id or a missing pub_id/slice raises
    :class:`MetadataError`.
    """
    path = Path(path)
    records: dict[str, PubRecord] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MetadataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise MetadataError(f"{path}:{lineno}: expected a JSON object")
            if "pub_id" not in obj:
                raise MetadataError(f"{path}:{lineno}: missing pub_id")
            pub_id = str(obj["pub_id"])
            if pub_id in records:
                raise MetadataError(f"{path}:{lineno}: duplicate pub_id {pub_id!r}")
            if "slice" not in obj or obj["slice"] is None:
                raise MetadataError(f"{path}:{lineno}: missing slice for {pub_id!r}")
            authors = obj.get("author_ids") or []
            if not isinstance(authors, list):
                raise MetadataError(f"{path}:{lineno}: author_ids must be an array")
            records[pub_id] = PubRecord(
                pub_id=pub_id,
                slice=obj["slice"],
                title=obj.get("title"),
                abstract=obj.get("abstract"),
                author_ids=frozenset(str(a) for a in authors),
            )
    return records


# -- datasets ----------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """A labeled set of publications with their citation graph."""

    label: str
    records: Mapping[str, PubRecord]
    graph: CitationGraph
    stub_records: int = 0

    def __post_init__(self) -> None:
        missing = [p for p in self.graph.node_ids if p not in self.records]
        if missing:
            raise GraphStoreError(
                f"dataset {self.label!r}: {len(missing)} edge endpoint(s) lack a "
                f"PubRecord (first: {missing[0]!r})")

    @classmethod
    def from_files(cls, label: str, edges_path: str | Path,
                   metadata_path: str | Path) -> "Dataset":
        """Assemble a dataset from an edge file and a metadata file.

        Edge endpoints absent from the metadata file get stub records
        (no text, no authors, slice = dataset label) so the dataset
        invariant holds; the stub count is logged and recorded.
        """
        graph = load_edges(edges_path)
        records = dict(load_metadata(metadata_path))
        stubs = 0
        for pub_id in graph.node_ids:
            if pub_id not in records:
                records[pub_id] = PubRecord(pub_id=pub_id, slice=label)
                stubs += 1
        if stubs:
            log.info("dataset %r: created %d stub record(s) for endpoints "
                     "missing from metadata", label, stubs)
        return cls(label=label, records=records, graph=graph, stub_records=stubs)


def _label_key(value: int | str) -> tuple[int, int | str]:
    try:
        return (0, int(value))
    except (TypeError, ValueError):
        return (1, str(value))


def union_datasets(parts: Sequence[Dataset], label: str = "combined") -> Dataset:
    """De-duplicated union of datasets.

    Node and edge sets are set-unions over pub_ids. A pub_id appearing in
    several parts keeps the record from the part with the earliest label;
    differing metadata for the same pub_id is counted and logged as a
    conflict.
    """
    if not parts:
        raise GraphStoreError("union_datasets requires at least one part")
    ordered = sorted(range(len(parts)), key=lambda i: (_label_key(parts[i].label), i))
    chosen: dict[str, PubRecord] = {}
    conflicts = 0
    seen_conflict: set[str] = set()
    for i in ordered:
        for pub_id, rec in parts[i].records.items():
            if pub_id not in chosen:
                chosen[pub_id] = rec
            elif chosen[pub_id] != rec and pub_id not in seen_conflict:
                conflicts += 1
                seen_conflict.add(pub_id)
    if conflicts:
        log.warning("union %r: %d pub_id(s) with conflicting metadata; kept the "
                    "earliest slice's record", label, conflicts)

    node_order: dict[str, int] = {}
    edge_keys: dict[tuple[str, str], None] = {}
    for part in parts:
        for pub_id in part.graph.node_ids:
            node_order.setdefault(pub_id, len(node_order))
        for u, v in part.graph.iter_edges():
            edge_keys.setdefault((part.graph.node_ids[u], part.graph.node_ids[v]))
    graph = CitationGraph.from_pairs(iter(edge_keys), node_ids=list(node_order))
    stubs = sum(1 for p in graph.node_ids if p not in chosen)
    for pub_id in graph.node_ids:
        if pub_id not in chosen:
            chosen[pub_id] = PubRecord(pub_id=pub_id, slice=label)
    return Dataset(label=label, records=chosen, graph=graph, stub_records=stubs)


def induced_subgraph(graph: CitationGraph, members: Iterable[int]) -> CitationGraph:
    """Restrict the graph to ``members`` (node indices), keeping directions."""
    member_list = sorted(set(int(m) for m in members))
    for m in member_list:
        if m < 0 or m >= graph.n_nodes:
            raise GraphStoreError(f"unknown node id: {m}")
    remap = {m: i for i, m in enumerate(member_list)}
    mask = np.zeros(graph.n_nodes, dtype=bool)
    mask[member_list] = True
    u, v = graph.edge_arrays()
    keep = mask[u] & mask[v]
    lookup = np.full(graph.n_nodes, -1, dtype=np.int64)
    for m, i in remap.items():
        lookup[m] = i
    node_ids = [graph.node_ids[m] for m in member_list]
    return CitationGraph(node_ids, lookup[u[keep]], lookup[v[keep]])
