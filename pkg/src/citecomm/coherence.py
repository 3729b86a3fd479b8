"""Textual coherence of clusters via Jensen-Shannon divergence.

An article's term distribution is compared against its cluster's term
distribution; the cluster score (mean article JSD) is baselined against
size-matched random article sets drawn from the whole corpus. High
coherence means the cluster reads more alike than a random set of the
same size.

Text normalization approximates lemmatization with a deterministic
suffix rule: strip one of ``-ing``, ``-ed``, ``-es``, ``-ly``, ``-s``
(longest suffix first, stem of at least 3 characters), repeated until a
fixpoint. This merges grow/growing/grows while keeping growth distinct,
and makes normalization idempotent.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphstore import PubRecord


class CoherenceError(Exception):
    pass


class ClusterTooSmall(CoherenceError):
    """Cluster has too few articles with text (the rule is: more than 10)."""


class CoherenceUndefined(CoherenceError):
    """No usable term vectors remain (e.g. every token occurred once)."""


_SUFFIXES = ("ing", "ed", "es", "ly", "s")  # longest first
_MIN_STEM = 3
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _strip_once(token: str) -> str:
    for suffix in _SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= _MIN_STEM:
            return token[: -len(suffix)]
    return token


def normalize_token(token: str) -> str:
    """Suffix-strip to a fixpoint; idempotent by construction."""
    while True:
        stripped = _strip_once(token)
        if stripped == token:
            return token
        token = stripped


def normalize_text(title: str | None, abstract: str | None,
                   stopwords: frozenset[str]) -> list[str]:
    """Tokenize title+abstract: lowercase, split on non-alphanumerics,
    suffix-normalize, drop stop-words and tokens shorter than 2."""
    text = " ".join(part for part in (title, abstract) if part)
    out = []
    for raw in _TOKEN_RE.findall(text.lower()):
        token = normalize_token(raw)
        if token in stopwords or len(token) < 2:
            continue
        out.append(token)
    return out


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One token per line, UTF-8, '#' comments; entries are normalized
    with the same suffix rule so inflected forms match."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        token = line.strip().lower()
        if not token or token.startswith("#"):
            continue
        words.add(normalize_token(token))
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    ref = resources.files("citecomm.data").joinpath("stopwords.txt")
    with resources.as_file(ref) as path:
        return load_stopwords(path)


def term_vector(tokens: Iterable[str]) -> Counter:
    return Counter(tokens)


def cluster_term_stats(articles: Sequence[PubRecord],
                       stopwords: frozenset[str]) -> tuple[list[Counter], Counter]:
    """Per-article term vectors and their sum, after dropping tokens that
    occur exactly once across the whole cluster.

    Articles must already be restricted to those with text; vectors that
    end up empty stay in the list (their JSD is skipped downstream).
    """
    vectors = [term_vector(normalize_text(a.title, a.abstract, stopwords))
               for a in articles]
    total = Counter()
    for vec in vectors:
        total.update(vec)
    singles = {t for t, c in total.items() if c == 1}
    if singles:
        vectors = [Counter({t: c for t, c in vec.items() if t not in singles})
                   for vec in vectors]
        total = Counter({t: c for t, c in total.items() if t not in singles})
    return vectors, total


def jsd(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """Jensen-Shannon divergence with base-2 logs over the union vocabulary.

    Inputs are raw counts; they are normalized internally. Zero-probability
    terms contribute nothing to their own KL sum. Result lies in [0, 1].
    """
    if not p or not q:
        raise CoherenceError("jsd needs two nonempty term vectors")
    # sorted union: summation order must not depend on set iteration order,
    # or identical runs in different processes drift in the last float bits
    vocab = sorted(p.keys() | q.keys())
    pv = np.array([p.get(t, 0.0) for t in vocab], dtype=np.float64)
    qv = np.array([q.get(t, 0.0) for t in vocab], dtype=np.float64)
    pv /= pv.sum()
    qv /= qv.sum()
    mv = 0.5 * (pv + qv)
    pmask = pv > 0
    qmask = qv > 0
    kl_pm = float(np.sum(pv[pmask] * np.log2(pv[pmask] / mv[pmask])))
    kl_qm = float(np.sum(qv[qmask] * np.log2(qv[qmask] / mv[qmask])))
    return 0.5 * kl_pm + 0.5 * kl_qm


@dataclass(frozen=True)
class BaselineStats:
    n: int
    reps: int
    values: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        """Dispersion of a single baseline draw (sample standard deviation)."""
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1))

    @property
    def std_error(self) -> float:
        """Standard error of the baseline mean."""
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1) / math.sqrt(len(self.values)))


@dataclass(frozen=True)
class CoherenceResult:
    cluster_id: int | str
    n_used: int
    jsd_cluster: float
    jsd_random: float
    coherence: float  # jsd_random - jsd_cluster: positive = more alike than random


class CoherenceScorer:
    """Scores clusters against one corpus with cached random baselines.

    The corpus is every record with text, in input order. All randomness
    derives from the seed; baselines are cached per subset size, so two
    calls with the same (corpus, seed, n) return identical values. The
    cache may be read concurrently once populated (see prepare()).
    """

    MIN_CLUSTER_SIZE = 11  # the rule: clusters of size greater than 10

    def __init__(self, records: Iterable[PubRecord], stopwords: frozenset[str] | None = None,
                 seed: int = 0, reps: int = 50):
        if reps < 1:
            raise ValueError("reps must be >= 1")
        self.stopwords = stopwords if stopwords is not None else default_stopwords()
        self.seed = seed
        self.reps = reps
        self._corpus: list[PubRecord] = [r for r in records if r.has_text()]
        self._by_id: dict[str, PubRecord] = {r.pub_id: r for r in self._corpus}
        self._baselines: dict[int, BaselineStats] = {}

    @property
    def corpus_size(self) -> int:
        return len(self._corpus)

    def texted_count(self, pub_ids: Iterable[str]) -> int:
        """How many of these pub_ids are corpus articles with text."""
        return sum(1 for p in pub_ids if p in self._by_id)

    def _mean_article_jsd(self, articles: Sequence[PubRecord]) -> float:
        vectors, total = cluster_term_stats(articles, self.stopwords)
        if not total:
            raise CoherenceUndefined(
                "no tokens left after removing cluster-unique terms")
        values = [jsd(vec, total) for vec in vectors if vec]
        if not values:
            raise CoherenceUndefined("no article term vector survived filtering")
        return float(np.mean(values))

    def jsd_cluster(self, member_pub_ids: Iterable[str]) -> tuple[float, int]:
        """Mean article-to-cluster JSD and the count of articles with text."""
        articles = [self._by_id[p] for p in sorted(member_pub_ids) if p in self._by_id]
        if not articles:
            raise CoherenceUndefined("cluster has no articles with text")
        return self._mean_article_jsd(articles), len(articles)

    def baseline_stats(self, n: int) -> BaselineStats:
        """Mean article JSD of ``reps`` uniformly drawn n-subsets, cached."""
        if n < 1:
            raise CoherenceError("baseline size must be >= 1")
        if n > self.corpus_size:
            raise CoherenceError(
                f"baseline size {n} exceeds corpus size {self.corpus_size}")
        cached = self._baselines.get(n)
        if cached is not None:
            return cached
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, n]))
        values = []
        for _ in range(self.reps):
            idx = rng.choice(self.corpus_size, size=n, replace=False)
            sample = [self._corpus[i] for i in sorted(idx.tolist())]
            values.append(self._mean_article_jsd(sample))
        stats = BaselineStats(n=n, reps=self.reps, values=tuple(values))
        self._baselines[n] = stats
        return stats

    def jsd_random_baseline(self, n: int) -> float:
        return self.baseline_stats(n).mean

    def prepare(self, sizes: Iterable[int]) -> None:
        """Populate the baseline cache for the given subset sizes."""
        for n in sorted(set(sizes)):
            self.baseline_stats(n)

    def coherence(self, cluster_id: int | str,
                  member_pub_ids: Iterable[str]) -> CoherenceResult:
        """Baseline-gap coherence for one cluster of pub_ids.

        Raises ClusterTooSmall unless more than 10 member articles have
        text; propagates CoherenceUndefined from degenerate vocabularies.
        """
        members = list(member_pub_ids)
        texted = [p for p in members if p in self._by_id]
        if len(texted) < self.MIN_CLUSTER_SIZE:
            raise ClusterTooSmall(
                f"cluster {cluster_id!r}: {len(texted)} articles with text; "
                f"need more than 10")
        value, n_used = self.jsd_cluster(texted)
        random_mean = self.jsd_random_baseline(n_used)
        return CoherenceResult(cluster_id=cluster_id, n_used=n_used,
                               jsd_cluster=value, jsd_random=random_mean,
                               coherence=random_mean - value)


COHERENCE_CSV_HEADER = ["cluster_id", "n_used", "jsd_cluster", "jsd_random", "coherence"]


def write_coherence_csv(results: Iterable[CoherenceResult], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COHERENCE_CSV_HEADER)
        for r in results:
            w.writerow([r.cluster_id, r.n_used, repr(r.jsd_cluster),
                        repr(r.jsd_random), repr(r.coherence)])


def read_coherence_csv(path: str | Path) -> list[CoherenceResult]:
    out = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COHERENCE_CSV_HEADER:
            raise CoherenceError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            out.append(CoherenceResult(
                cluster_id=rec["cluster_id"], n_used=int(rec["n_used"]),
                jsd_cluster=float(rec["jsd_cluster"]),
                jsd_random=float(rec["jsd_random"]),
                coherence=float(rec["coherence"])))
    return out
