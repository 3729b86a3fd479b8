import numpy as np
import pytest

from citecomm.communities import (CommunityError, EdgeCase, EdgeCaseThresholds,
                                  author_cluster_distribution, build_profile,
                                  classify_edge_case, filter_communities)
from citecomm.graphstore import CitationGraph, PubRecord


def records_for(authors_by_pub, slice_=2000):
    return {pub: PubRecord(pub_id=pub, slice=slice_,
                           author_ids=frozenset(authors))
            for pub, authors in authors_by_pub.items()}


class TestBuildProfile:
    def test_hand_counts(self):
        g = CitationGraph.from_pairs([], node_ids=["p1", "p2", "p3"])
        records = records_for({"p1": {"x"}, "p2": {"x"}, "p3": {"y"}})
        prof = build_profile([0, 1, 2], records, g, cluster_id=0)
        assert prof.authors == {"x": 2, "y": 1}
        assert prof.one_paper_fraction == 0.5
        assert prof.p95_range == 2  # nearest rank on [1, 2]
        assert prof.p99_range == 2

    def test_all_single_authors(self):
        g = CitationGraph.from_pairs([], node_ids=["p1", "p2", "p3"])
        records = records_for({"p1": {"a"}, "p2": {"b"}, "p3": {"c"}})
        prof = build_profile([0, 1, 2], records, g)
        assert prof.one_paper_fraction == 1.0

    def test_percentiles_non_decreasing(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            pubs = {f"p{i}": {f"a{rng.integers(8)}" for _ in range(rng.integers(1, 4))}
                    for i in range(n)}
            g = CitationGraph.from_pairs([], node_ids=list(pubs))
            prof = build_profile(range(n), records_for(pubs), g)
            assert prof.p95_range <= prof.p99_range <= max(prof.authors.values())

    def test_author_count_sum_equals_authorship_sum(self):
        pubs = {"p1": {"a", "b"}, "p2": {"b", "c"}, "p3": {"c"}}
        g = CitationGraph.from_pairs([], node_ids=list(pubs))
        prof = build_profile(range(3), records_for(pubs), g)
        assert sum(prof.authors.values()) == sum(len(a) for a in pubs.values())

    def test_top_authors_never_citing_gives_zero_density(self):
        g = CitationGraph.from_pairs([], node_ids=["p1", "p2"])
        records = records_for({"p1": {"x"}, "p2": {"y"}})
        prof = build_profile([0, 1], records, g)
        assert prof.top_author_citation_density == 0.0

    def test_top_author_citation_density_counts_ordered_pairs(self):
        # x's paper cites y's paper inside the cluster: density 1/2
        g = CitationGraph.from_pairs([("p1", "p2")])
        records = records_for({"p1": {"x"}, "p2": {"y"}})
        prof = build_profile([0, 1], records, g)
        assert prof.top_author_citation_density == 0.5

    def test_authorless_cluster_flagged(self):
        g = CitationGraph.from_pairs([], node_ids=["p1", "p2"])
        records = records_for({"p1": set(), "p2": set()})
        prof = build_profile([0, 1], records, g)
        assert prof.no_author_data is True
        assert prof.authorless_articles == 2


class TestAuthorClusterDistribution:
    def test_single_cluster_author(self):
        records = records_for({"p1": {"x"}, "p2": {"x"}})
        counts, summary = author_cluster_distribution([["p1", "p2"]], records)
        assert counts == {"x": 1}
        assert summary.fraction_one == 1.0

    def test_author_in_three_clusters(self):
        records = records_for({"p1": {"x"}, "p2": {"x"}, "p3": {"x", "y"}})
        counts, summary = author_cluster_distribution(
            [["p1"], ["p2"], ["p3"]], records)
        assert counts["x"] == 3
        assert counts["y"] == 1
        assert summary.max_clusters == 3
        assert summary.mean_clusters == 2.0

    def test_summary_fields_populated(self):
        records = records_for({f"p{i}": {f"a{i % 4}"} for i in range(12)})
        clusters = [[f"p{i}" for i in range(j, 12, 3)] for j in range(3)]
        counts, summary = author_cluster_distribution(clusters, records)
        assert summary.n_authors == 4
        assert 0.0 <= summary.fraction_one <= summary.fraction_le5 <= 1.0
        assert summary.mean_clusters > 0


def singleton_with_external(n_external):
    pairs = [(f"ext{i}", "solo") for i in range(n_external // 2)]
    pairs += [("solo", f"extb{i}") for i in range(n_external - n_external // 2)]
    g = CitationGraph.from_pairs(pairs)
    return g, [g.index_of("solo")]


def hub_citing_cluster(size, cited_count):
    ids = [f"p{i}" for i in range(size)]
    pairs = [(ids[0], ids[i]) for i in range(1, cited_count + 1)]
    pairs += [(ids[1], ids[0])]  # the hub is itself cited by another member
    g = CitationGraph.from_pairs(pairs, node_ids=ids)
    return g, list(range(size))


def hub_cited_cluster(size):
    ids = [f"p{i}" for i in range(size)]
    pairs = [(ids[i], ids[0]) for i in range(1, size)]
    g = CitationGraph.from_pairs(pairs, node_ids=ids)
    return g, list(range(size))


class TestClassifyEdgeCase:
    def test_singleton_with_many_external_edges(self):
        g, cluster = singleton_with_external(351)
        result = classify_edge_case(cluster, g)
        assert result.label is EdgeCase.SINGLETON_HIGH_EXTERNAL
        assert result.external_edges == 351

    def test_hub_citing_125_cluster(self):
        g, cluster = hub_citing_cluster(125, 123)
        result = classify_edge_case(cluster, g)
        assert result.label is EdgeCase.HUB_CITING
        assert result.max_intra_citing == 123

    def test_hub_cited_108_cluster(self):
        g, cluster = hub_cited_cluster(108)
        result = classify_edge_case(cluster, g)
        assert result.label is EdgeCase.HUB_CITED
        assert result.max_intra_cited == 107

    def test_normal_cluster(self):
        # 5-node citation ring: every member cites exactly one other
        ids = [f"p{i}" for i in range(5)]
        g = CitationGraph.from_pairs([(ids[i], ids[(i + 1) % 5]) for i in range(5)])
        result = classify_edge_case(range(5), g)
        assert result.label is EdgeCase.NORMAL

    def test_singleton_below_threshold_is_normal(self):
        g, cluster = singleton_with_external(10)
        assert classify_edge_case(cluster, g).label is EdgeCase.NORMAL

    def test_precedence_singleton_first(self):
        g, cluster = singleton_with_external(60)
        result = classify_edge_case(cluster, g,
                                    EdgeCaseThresholds(external_threshold=50))
        assert result.label is EdgeCase.SINGLETON_HIGH_EXTERNAL

    def test_citing_takes_precedence_over_cited(self):
        # one node cites everyone AND is cited by everyone
        ids = [f"p{i}" for i in range(5)]
        pairs = [(ids[0], ids[i]) for i in range(1, 5)]
        pairs += [(ids[i], ids[0]) for i in range(1, 5)]
        g = CitationGraph.from_pairs(pairs, node_ids=ids)
        assert classify_edge_case(range(5), g).label is EdgeCase.HUB_CITING

    def test_empty_cluster_rejected(self):
        g = CitationGraph.from_pairs([("a", "b")])
        with pytest.raises(CommunityError):
            classify_edge_case([], g)


class TestFilterCommunities:
    def make(self, labels):
        g = CitationGraph.from_pairs([], node_ids=["p"])
        records = records_for({"p": {"a"}})
        profiles = {}
        results = {}
        for cid, label in enumerate(labels):
            profiles[cid] = build_profile([0], records, g, cluster_id=cid)
            g2, cluster = ((singleton_with_external(60)) if label is not EdgeCase.NORMAL
                           else (g, [0]))
            results[cid] = classify_edge_case(cluster, g2)
        return profiles, results

    def test_all_normal_accepted(self):
        profiles, labels = self.make([EdgeCase.NORMAL] * 3)
        accepted, rejected = filter_communities(profiles, labels)
        assert len(accepted) == 3 and rejected == []

    def test_one_rejected_with_reason(self):
        profiles, labels = self.make(
            [EdgeCase.NORMAL, EdgeCase.SINGLETON_HIGH_EXTERNAL, EdgeCase.NORMAL])
        accepted, rejected = filter_communities(profiles, labels)
        assert [cid for cid, _ in accepted] == [0, 2]
        assert rejected == [(1, "SingletonHighExternal")]

    def test_empty_input(self):
        assert filter_communities({}, {}) == ([], [])

    def test_missing_label_raises(self):
        profiles, labels = self.make([EdgeCase.NORMAL])
        with pytest.raises(CommunityError):
            filter_communities(profiles, {})
