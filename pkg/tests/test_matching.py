import numpy as np
import pytest

from citecomm.clustering import Clustering, Provenance
from citecomm.matching import (ClusterMatch, MatchingError, SelectionCriteria,
                               best_match, jaccard, match_all, read_matches_csv,
                               select_candidates, write_matches_csv,
                               MATCHES_CSV_HEADER)
from citecomm.metrics import ClusterMetrics

PROV = Provenance(engine="test", dataset="t")


def clustering_of(*groups, label="t"):
    node_ids = [p for g in groups for p in g]
    member_sets = []
    offset = 0
    for g in groups:
        member_sets.append(list(range(offset, offset + len(g))))
        offset += len(g)
    return Clustering.from_member_sets(node_ids, member_sets,
                                       Provenance(engine="test", dataset=label))


class TestJaccard:
    def test_identical(self):
        assert jaccard({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint(self):
        assert jaccard({"a"}, {"b"}) == 0.0

    def test_symmetric(self):
        a, b = {"a", "b", "c"}, {"b", "c", "d"}
        assert jaccard(a, b) == jaccard(b, a) == 0.5


class TestBestMatch:
    def test_identical_cluster(self):
        target = clustering_of(["x", "y"], ["z"])
        m = best_match(frozenset({"x", "y"}), target, source_id=0)
        assert m.jaccard == 1.0
        assert m.proportion == 1.0
        assert m.target_cluster_id == 0

    def test_paper_shaped_sizes(self):
        # source 190, target 194, intersection 188 -> jc = 188/196 ~ 0.96
        shared = [f"s{i}" for i in range(188)]
        source = frozenset(shared + ["only_m1", "only_m2"])
        target_members = shared + [f"g{i}" for i in range(6)]
        target = clustering_of(target_members)
        m = best_match(source, target, source_id=0)
        assert m.intersection == 188
        assert m.jaccard == pytest.approx(188 / 196)
        assert round(m.jaccard, 2) == 0.96

    def test_disjoint_source(self):
        target = clustering_of(["x", "y"])
        m = best_match(frozenset({"q"}), target, source_id=3)
        assert m.intersection == 0
        assert m.jaccard == 0.0
        assert m.proportion == 0.0
        assert m.target_cluster_id == -1

    def test_tie_broken_by_jaccard_then_id(self):
        # both targets intersect with 2 elements; smaller target wins on jaccard
        target = clustering_of(["a", "b", "c"], ["d", "e"])
        m = best_match(frozenset({"b", "c", "d", "e"}), target)
        assert m.target_cluster_id == 1  # jaccard 2/4 beats 2/5

    def test_empty_source_rejected(self):
        with pytest.raises(MatchingError):
            best_match(frozenset(), clustering_of(["a"]))


class TestMatchAll:
    def test_self_match_all_ones(self):
        c = clustering_of(["a", "b"], ["c"], ["d", "e", "f"])
        for m in match_all(c, c):
            assert m.jaccard == 1.0
            assert m.target_cluster_id == m.source_cluster_id

    def test_split_cluster_half_jaccard(self):
        source = clustering_of([f"p{i}" for i in range(10)])
        half1 = [f"p{i}" for i in range(5)]
        half2 = [f"p{i}" for i in range(5, 10)]
        target = clustering_of(half1, half2)
        m = match_all(source, target)[0]
        assert m.jaccard == 0.5
        assert m.proportion == 0.5

    def test_multi_slice_records_winning_label(self):
        source = clustering_of(["a", "b", "c"])
        t1 = clustering_of(["a"], label="1990")
        t2 = clustering_of(["a", "b", "c", "d"], label="1991")
        m = match_all(source, {"1990": t1, "1991": t2})[0]
        assert m.target_label == "1991"
        assert m.intersection == 3

    def test_agrees_with_exhaustive_search(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            n = int(rng.integers(4, 20))
            ids = [f"p{i}" for i in range(n)]
            source = Clustering.from_labels(ids, rng.integers(0, 4, n), PROV)
            targets = {}
            for label in ("x", "y"):
                targets[label] = Clustering.from_labels(
                    ids, rng.integers(0, 3, n),
                    Provenance(engine="test", dataset=label))
            got = match_all(source, targets)
            for sid in range(source.n_clusters):
                sset = source.pubids(sid)
                brute = best_match(sset, targets, source_id=sid)
                assert got[sid] == brute
                for label, t in targets.items():
                    for tid in range(t.n_clusters):
                        assert got[sid].intersection >= len(sset & t.pubids(tid))

    def test_proportions_in_unit_interval(self):
        rng = np.random.default_rng(43)
        ids = [f"p{i}" for i in range(30)]
        source = Clustering.from_labels(ids, rng.integers(0, 5, 30), PROV)
        target = Clustering.from_labels(ids, rng.integers(0, 5, 30), PROV)
        for m in match_all(source, target):
            assert 0.0 <= m.proportion <= 1.0
            assert m.proportion >= m.jaccard


def metrics_row(cid, size, cond):
    return ClusterMetrics(cluster_id=cid, size=size, internal_edges=0,
                          cut_edges=0, conductance=cond)


def match_row(cid, jc):
    return ClusterMatch(source_cluster_id=cid, target_label="t",
                        target_cluster_id=0, intersection=1, jaccard=jc,
                        proportion=1.0)


class TestSelectCandidates:
    def make(self, specs):
        """specs: list of (size, conductance, jaccard) per cluster id."""
        n = len(specs)
        ids = []
        member_sets = []
        at = 0
        for size, _, _ in specs:
            ids.extend(f"p{at + i}" for i in range(size))
            member_sets.append(list(range(at, at + size)))
            at += size
        mcl = Clustering.from_member_sets(ids, member_sets, PROV)
        metrics = {i: metrics_row(i, s, c) for i, (s, c, _) in enumerate(specs)}
        matches = {i: match_row(i, j) for i, (_, _, j) in enumerate(specs)}
        return mcl, metrics, matches

    def test_size_below_minimum_excluded(self):
        mcl, metrics, matches = self.make([(20, 0.1, 0.95)])
        assert select_candidates(mcl, metrics, matches, SelectionCriteria()) == []

    def test_all_rules_pass(self):
        mcl, metrics, matches = self.make([(100, 0.03, 0.95)])
        assert select_candidates(mcl, metrics, matches, SelectionCriteria()) == [0]

    def test_boundary_semantics(self):
        # sizes 30 and 350 inclusive; conductance 0.5 inclusive; jaccard 0.9 strict
        mcl, metrics, matches = self.make([
            (30, 0.5, 0.91), (350, 0.5, 0.91), (100, 0.5, 0.9), (100, 0.51, 0.95)])
        got = select_candidates(mcl, metrics, matches, SelectionCriteria())
        assert got == [0, 1]

    def test_ascending_order(self):
        mcl, metrics, matches = self.make([(40, 0.1, 0.95)] * 3)
        assert select_candidates(mcl, metrics, matches, SelectionCriteria()) == [0, 1, 2]

    def test_missing_coverage_raises(self):
        mcl, metrics, matches = self.make([(40, 0.1, 0.95)])
        with pytest.raises(MatchingError):
            select_candidates(mcl, {}, matches, SelectionCriteria())

    def test_monotone_under_tightening(self):
        rng = np.random.default_rng(47)
        for _ in range(100):
            specs = [(int(rng.integers(1, 400)), float(rng.random()),
                      float(rng.random())) for _ in range(rng.integers(1, 8))]
            mcl, metrics, matches = self.make(specs)
            base = SelectionCriteria(min_size=int(rng.integers(1, 50)),
                                     max_size=int(rng.integers(300, 400)),
                                     max_conductance=float(rng.random()),
                                     min_jaccard=float(rng.random()))
            tighter = SelectionCriteria(
                min_size=base.min_size + int(rng.integers(0, 10)),
                max_size=base.max_size - int(rng.integers(0, 10)),
                max_conductance=base.max_conductance * float(rng.random()),
                min_jaccard=min(1.0, base.min_jaccard + float(rng.random()) * 0.1))
            loose = set(select_candidates(mcl, metrics, matches, base))
            tight = set(select_candidates(mcl, metrics, matches, tighter))
            assert tight <= loose


def test_matches_csv_round_trip(tmp_path):
    rows = [ClusterMatch(0, "1990", 3, 17, 0.85, 0.93),
            ClusterMatch(1, "", -1, 0, 0.0, 0.0)]
    path = tmp_path / "m.csv"
    write_matches_csv(rows, path)
    assert path.read_text().splitlines()[0] == ",".join(MATCHES_CSV_HEADER)
    assert read_matches_csv(path) == rows
