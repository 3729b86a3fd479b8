from collections import Counter

import pytest

from citecomm.graphstore import CitationGraph
from citecomm.shuffle import ShuffleReport, shuffle_citations
from citecomm.synth import planted_partition_graph


def degree_multiset(graph):
    return Counter(zip(graph.in_degrees().tolist(), graph.out_degrees().tolist()))


def edge_set(graph):
    return set(zip(*(a.tolist() for a in graph.edge_arrays())))


class TestShuffleCitations:
    def test_zero_swaps_identity(self):
        g = CitationGraph.from_pairs([("a", "b"), ("c", "d")])
        out, report = shuffle_citations(g, 0, seed=1)
        assert edge_set(out) == edge_set(g)
        assert report == ShuffleReport(0, 0, 0, 1)

    def test_single_possible_swap(self):
        # edges {a->b, c->d}: the only proposal is {a->d, c->b}
        g = CitationGraph.from_pairs([("a", "b"), ("c", "d")])
        out, report = shuffle_citations(g, 1, seed=0)
        assert report.performed_swaps == 1
        a, b, c, d = (g.index_of(x) for x in "abcd")
        assert edge_set(out) == {(a, d), (c, b)}
        assert degree_multiset(out) == degree_multiset(g)

    def test_two_cycle_always_rejected(self):
        g = CitationGraph.from_pairs([("a", "b"), ("b", "a")])
        out, report = shuffle_citations(g, 25, seed=3)
        assert report.performed_swaps == 0
        assert report.rejected_swaps == 25
        assert edge_set(out) == edge_set(g)

    def test_attempt_accounting(self):
        pp = planted_partition_graph(3, 15, 0.4, 0.05, seed=1)
        _, report = shuffle_citations(pp.graph, 500, seed=2)
        assert report.performed_swaps + report.rejected_swaps == 500
        assert report.requested_swaps == 500
        assert report.performed_swaps > 0

    def test_too_few_edges_rejected(self):
        g = CitationGraph.from_pairs([("a", "b")])
        with pytest.raises(ValueError):
            shuffle_citations(g, 5, seed=0)

    def test_deterministic_by_seed(self):
        pp = planted_partition_graph(3, 12, 0.4, 0.05, seed=5)
        out1, rep1 = shuffle_citations(pp.graph, 300, seed=11)
        out2, rep2 = shuffle_citations(pp.graph, 300, seed=11)
        assert edge_set(out1) == edge_set(out2)
        assert rep1 == rep2
        out3, _ = shuffle_citations(pp.graph, 300, seed=12)
        assert edge_set(out3) != edge_set(out1)

    def test_degrees_preserved_no_loops_no_dupes(self):
        for gseed in (0, 1):
            pp = planted_partition_graph(4, 15, 0.35, 0.03, seed=gseed)
            before = degree_multiset(pp.graph)
            for seed in range(5):
                out, _ = shuffle_citations(pp.graph, 2000, seed=seed)
                assert degree_multiset(out) == before
                out.validate()  # raises on loops, duplicates, transpose breaks

    def test_shuffle_actually_randomizes(self):
        pp = planted_partition_graph(4, 20, 0.4, 0.01, seed=7)
        out, report = shuffle_citations(pp.graph, 10 * pp.graph.n_edges, seed=1)
        assert report.performed_swaps > pp.graph.n_edges
        assert len(edge_set(out) & edge_set(pp.graph)) < pp.graph.n_edges / 2
