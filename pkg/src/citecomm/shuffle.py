"""Degree-preserving citation shuffling (double-edge swaps).

Each attempt draws two distinct directed edges (a->b, c->d) and proposes
(a->d, c->b); the proposal is rejected, not resampled, if it would create
a self-loop or a duplicate edge. In- and out-degrees of every node are
therefore preserved exactly for any seed and swap count.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graphstore import CitationGraph


@dataclass(frozen=True)
class ShuffleReport:
    requested_swaps: int
    performed_swaps: int
    rejected_swaps: int
    seed: int

    def to_json(self) -> dict:
        return asdict(self)


def shuffle_citations(graph: CitationGraph, swaps: int,
                      seed: int) -> tuple[CitationGraph, ShuffleReport]:
    """Run ``swaps`` swap attempts on a copy of the graph's edge set."""
    if swaps < 0:
        raise ValueError("swaps must be >= 0")
    if swaps == 0:
        return graph.with_edges(*graph.edge_arrays()), ShuffleReport(0, 0, 0, seed)
    m = graph.n_edges
    if m < 2:
        raise ValueError("shuffling needs at least 2 edges")
    n = graph.n_nodes
    citing, cited = graph.edge_arrays()
    present = set((citing * n + cited).tolist())
    citing = citing.tolist()
    cited = cited.tolist()
    rng = np.random.default_rng(seed)
    performed = 0
    rejected = 0
    ii = rng.integers(0, m, size=swaps)
    jj = rng.integers(0, m - 1, size=swaps)
    jj = jj + (jj >= ii)  # uniform over ordered pairs of distinct edge indices
    for i, j in zip(ii.tolist(), jj.tolist()):
        a, b = citing[i], cited[i]
        c, d = citing[j], cited[j]
        if a == d or c == b:
            rejected += 1
            continue
        new1 = a * n + d
        new2 = c * n + b
        if new1 in present or new2 in present:
            rejected += 1
            continue
        present.discard(a * n + b)
        present.discard(c * n + d)
        present.add(new1)
        present.add(new2)
        cited[i] = d
        cited[j] = b
        performed += 1
    shuffled = graph.with_edges(np.asarray(citing, dtype=np.int64),
                                np.asarray(cited, dtype=np.int64))
    report = ShuffleReport(requested_swaps=swaps, performed_swaps=performed,
                           rejected_swaps=rejected, seed=seed)
    return shuffled, report


def write_shuffle_report(report: ShuffleReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
