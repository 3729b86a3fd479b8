"""Synthetic benchmark generators: planted partitions and block corpora.

These drive the test oracles and the bundled toy dataset: the generator
knows the ground-truth partition and vocabulary blocks, so recovery and
coherence claims can be checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphstore import CitationGraph, PubRecord


@dataclass(frozen=True)
class PlantedPartition:
    graph: CitationGraph
    labels: np.ndarray  # ground-truth block per node


def planted_partition_graph(blocks: int, per_block: int, p_in: float, p_out: float,
                            seed: int, id_prefix: str = "n") -> PlantedPartition:
    """Directed planted-partition (SBM) citation graph.

    Each undirected node pair gets an edge with probability p_in inside a
    block and p_out across blocks; the citation direction of every edge
    is then chosen uniformly. Node ids are ``<prefix><index>`` zero
    padded, so ordering is stable.
    """
    rng = np.random.default_rng(seed)
    n = blocks * per_block
    labels = np.repeat(np.arange(blocks), per_block)
    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, p_in, p_out)
    present = rng.random(iu.size) < prob
    u = iu[present]
    v = ju[present]
    flip = rng.random(u.size) < 0.5
    citing = np.where(flip, v, u)
    cited = np.where(flip, u, v)
    width = len(str(n - 1))
    ids = [f"{id_prefix}{i:0{width}d}" for i in range(n)]
    graph = CitationGraph(ids, citing, cited)
    return PlantedPartition(graph=graph, labels=labels)


def hub_planted_partition(blocks: int, per_block: int, member_prob: float,
                          p_out: float, seed: int,
                          id_prefix: str = "n") -> PlantedPartition:
    """Planted partition with one high-degree hub per block.

    Every block member links to its block hub (citing it 80% of the
    time); member pairs connect with ``member_prob`` and cross-block
    pairs with ``p_out``. The heavy-tailed degree sequence matches real
    citation graphs, so a degree-preserving shuffle still produces
    hub-centered mid-size clusters instead of dust.
    """
    rng = np.random.default_rng(seed)
    n = blocks * per_block
    labels = np.repeat(np.arange(blocks), per_block)
    edges: set[tuple[int, int]] = set()
    for b in range(blocks):
        base = b * per_block
        hub = base
        for i in range(base + 1, base + per_block):
            edges.add((i, hub) if rng.random() < 0.8 else (hub, i))
        for i in range(base + 1, base + per_block):
            for j in range(i + 1, base + per_block):
                if rng.random() < member_prob:
                    edges.add((i, j) if rng.random() < 0.5 else (j, i))
    iu, ju = np.triu_indices(n, k=1)
    cross = labels[iu] != labels[ju]
    pick = rng.random(iu.size) < p_out
    for a, b in zip(iu[cross & pick].tolist(), ju[cross & pick].tolist()):
        edges.add((a, b))
    width = len(str(n - 1))
    ids = [f"{id_prefix}{i:0{width}d}" for i in range(n)]
    u = np.array([e[0] for e in sorted(edges)], dtype=np.int64)
    v = np.array([e[1] for e in sorted(edges)], dtype=np.int64)
    return PlantedPartition(graph=CitationGraph(ids, u, v), labels=labels)


def block_vocabulary(block: int, size: int = 40) -> list[str]:
    """Deterministic per-block token list, disjoint across blocks."""
    return [f"topic{block}term{t}" for t in range(size)]


def synthetic_corpus(labels: np.ndarray, node_ids: list[str] | tuple[str, ...],
                     seed: int, tokens_per_article: int = 60,
                     shared_fraction: float = 0.2, vocab_size: int = 40,
                     slice_of: "dict[str, int | str] | None" = None) -> dict[str, PubRecord]:
    """Give every node a title/abstract drawn from its block vocabulary.

    A ``shared_fraction`` of each article's tokens comes from a global
    vocabulary common to all blocks; the rest from the block vocabulary,
    so same-block articles are textually coherent and cross-block ones
    are not.
    """
    rng = np.random.default_rng(seed)
    shared = [f"commonterm{t}" for t in range(vocab_size)]
    records: dict[str, PubRecord] = {}
    for idx, pub_id in enumerate(node_ids):
        block_vocab = block_vocabulary(int(labels[idx]), vocab_size)
        n_shared = int(round(tokens_per_article * shared_fraction))
        n_block = tokens_per_article - n_shared
        words = [shared[i] for i in rng.integers(0, vocab_size, n_shared)]
        words += [block_vocab[i] for i in rng.integers(0, vocab_size, n_block)]
        title = " ".join(words[:8])
        abstract = " ".join(words[8:])
        slice_label = slice_of[pub_id] if slice_of else 2000
        records[pub_id] = PubRecord(pub_id=pub_id, slice=slice_label,
                                    title=title, abstract=abstract,
                                    author_ids=frozenset())
    return records
