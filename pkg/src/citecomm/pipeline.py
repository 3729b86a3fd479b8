"""Batch orchestration of the full community-finding workflow.

A declarative INI config drives: ingest -> per-slice MCL + MKKM ->
combined MCL -> metrics -> combined-to-slice matching -> slice
MCL-to-MKKM pairing -> coherence -> selection -> edge-case
classification -> community profiles -> reports. Every run writes a
manifest with input and artifact digests and no timestamps, so a rerun
with identical config and inputs is byte-identical.

All stage seeds derive from one master seed by labeled hashing; adding a
stage never perturbs another stage's randomness.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
import os
import re
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import clustering as cl
from . import coherence as coh
from . import communities as comm
from . import graphstore as gs
from . import matching as mt
from . import metrics as mx
from .mcl import MclParams, mcl_cluster
from .mkkm import MkkmParams, choose_k, mkkm_cluster
from .shuffle import shuffle_citations, write_shuffle_report

log = logging.getLogger(__name__)


OUTPUT_DIR_ENV = "CITECOMM_OUTPUT"  # default output dir when the config has none


class ConfigError(Exception):
    """Invalid or inconsistent pipeline configuration."""


class StageFailure(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def derive_seed(master: int, label: str) -> int:
    """Stable per-stage seed from the master seed and a stage label."""
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", label)


@dataclass(frozen=True)
class SliceSpec:
    label: str
    edges: Path
    metadata: Path


@dataclass(frozen=True)
class PipelineConfig:
    slices: tuple[SliceSpec, ...]
    output_dir: Path
    seed: int = 0
    threads: int = 1
    mcl: MclParams = field(default_factory=MclParams)
    mkkm_k: int | None = None  # None = auto (half the slice MCL cluster count)
    mkkm_refine_iterations: int = 10
    mkkm_coarsen_until: int | None = None
    selection: mt.SelectionCriteria = field(default_factory=mt.SelectionCriteria)
    stopwords_path: Path | None = None
    coherence_reps: int = 50
    shuffle_swaps: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(strict=True, interpolation=None)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None

        def get(section: str, option: str, conv, default):
            if not parser.has_option(section, option):
                return default
            raw = parser.get(section, option).strip()
            if raw == "":
                return default
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] {option}: {exc}") from None

        slices = []
        for section in parser.sections():
            if not section.startswith("slice:"):
                continue
            label = section.split(":", 1)[1].strip()
            if not label:
                raise ConfigError(f"{path}: empty slice label in [{section}]")
            if not parser.has_option(section, "edges"):
                raise ConfigError(f"{path}: [{section}] needs an 'edges' path")
            if not parser.has_option(section, "metadata"):
                raise ConfigError(f"{path}: [{section}] needs a 'metadata' path")
            base = path.parent
            slices.append(SliceSpec(
                label=label,
                edges=(base / parser.get(section, "edges")).resolve(),
                metadata=(base / parser.get(section, "metadata")).resolve()))
        if not slices:
            raise ConfigError(f"{path}: at least one [slice:<label>] section required")
        if parser.has_option("pipeline", "output"):
            output_dir = (path.parent / parser.get("pipeline", "output")).resolve()
        else:
            env = os.environ.get(OUTPUT_DIR_ENV)
            if not env:
                raise ConfigError(
                    f"{path}: [pipeline] output is required (or set {OUTPUT_DIR_ENV})")
            output_dir = Path(env).resolve()

        k_raw = get("mkkm", "k", str, "auto")
        if isinstance(k_raw, str) and k_raw.lower() == "auto":
            mkkm_k = None
        else:
            try:
                mkkm_k = int(k_raw)
            except ValueError:
                raise ConfigError(f"{path}: [mkkm] k must be an integer or 'auto'") from None

        stopwords = get("coherence", "stopwords", str, None)
        try:
            mcl_params = MclParams(
                expansion=get("mcl", "expansion", int, 2),
                inflation=get("mcl", "inflation", float, 2.0),
                prune_threshold=get("mcl", "prune_threshold", float, 1e-4),
                max_iterations=get("mcl", "max_iterations", int, 200),
                convergence_epsilon=get("mcl", "convergence_epsilon", float, 1e-6))
            selection = mt.SelectionCriteria(
                min_size=get("selection", "min_size", int, 30),
                max_size=get("selection", "max_size", int, 350),
                max_conductance=get("selection", "max_conductance", float, 0.5),
                min_jaccard=get("selection", "min_jaccard", float, 0.9))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls(
            slices=tuple(sorted(slices, key=lambda s: gs._label_key(s.label))),
            output_dir=output_dir,
            seed=get("pipeline", "seed", int, 0),
            threads=get("pipeline", "threads", int, 1),
            mcl=mcl_params,
            mkkm_k=mkkm_k,
            mkkm_refine_iterations=get("mkkm", "refine_iterations", int, 10),
            mkkm_coarsen_until=get("mkkm", "coarsen_until", int, None),
            selection=selection,
            stopwords_path=(path.parent / stopwords).resolve() if stopwords else None,
            coherence_reps=get("coherence", "reps", int, 50),
            shuffle_swaps=get("shuffle", "swaps", int, 0))

    def validate(self) -> None:
        labels = [s.label for s in self.slices]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate slice labels: {labels}")
        if "combined" in labels:
            raise ConfigError("'combined' is reserved for the union dataset")
        for s in self.slices:
            if not s.edges.is_file():
                raise ConfigError(f"slice {s.label!r}: edge file not found: {s.edges}")
            if not s.metadata.is_file():
                raise ConfigError(f"slice {s.label!r}: metadata file not found: {s.metadata}")
        if self.stopwords_path is not None and not self.stopwords_path.is_file():
            raise ConfigError(f"stop-list not found: {self.stopwords_path}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.coherence_reps < 1:
            raise ConfigError("coherence reps must be >= 1")
        if self.shuffle_swaps < 0:
            raise ConfigError("shuffle swaps must be >= 0")
        if self.mkkm_k is not None and self.mkkm_k < 1:
            raise ConfigError("mkkm k must be >= 1")

    def to_json(self) -> dict:
        return {
            "slices": [{"label": s.label, "edges": str(s.edges),
                        "metadata": str(s.metadata)} for s in self.slices],
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "threads": self.threads,
            "mcl": {"expansion": self.mcl.expansion, "inflation": self.mcl.inflation,
                    "prune_threshold": self.mcl.prune_threshold,
                    "max_iterations": self.mcl.max_iterations,
                    "convergence_epsilon": self.mcl.convergence_epsilon},
            "mkkm": {"k": self.mkkm_k, "refine_iterations": self.mkkm_refine_iterations,
                     "coarsen_until": self.mkkm_coarsen_until},
            "selection": {"min_size": self.selection.min_size,
                          "max_size": self.selection.max_size,
                          "max_conductance": self.selection.max_conductance,
                          "min_jaccard": self.selection.min_jaccard},
            "coherence": {"stopwords": str(self.stopwords_path) if self.stopwords_path else None,
                          "reps": self.coherence_reps},
            "shuffle": {"swaps": self.shuffle_swaps},
        }


TABLE1_HEADER = ["dataset", "num_clusters", "num_articles", "mean_size",
                 "median_size", "mean_conductance", "mean_coherence"]
TABLE3_HEADER = ["match_label", "size_m", "size_g", "cond_m", "cond_g",
                 "coh_m", "coh_g", "int_edges_m", "int_edges_g", "jc"]


@dataclass
class PipelineResult:
    output_dir: Path
    manifest: dict
    selected: list[int]
    accepted_communities: list[int]


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_edges_tsv(graph: gs.CitationGraph, path: str | Path) -> None:
    """Write the directed edge list in the ingestion TSV format."""
    u, v = graph.edge_arrays()
    with Path(path).open("w", encoding="utf-8") as fh:
        for a, b in zip(u.tolist(), v.tolist()):
            fh.write(f"{graph.node_ids[a]}\t{graph.node_ids[b]}\n")


class _Run:
    """Mutable state threaded through the pipeline stages."""

    def __init__(self, config: PipelineConfig, staging: Path):
        self.config = config
        self.staging = staging
        self.artifacts: list[str] = []
        self.datasets: dict[str, gs.Dataset] = {}
        self.combined: gs.Dataset | None = None
        self.mcl_slices: dict[str, cl.Clustering] = {}
        self.mkkm_slices: dict[str, cl.Clustering] = {}
        self.mcl_combined: cl.Clustering | None = None
        self.metrics: dict[str, mx.MetricsTable] = {}  # artifact key -> table
        self.combined_to_slice: list[mt.ClusterMatch] = []
        self.pair_matches: dict[str, list[mt.ClusterMatch]] = {}
        self.coherence: dict[str, dict[int, coh.CoherenceResult]] = {}
        self.selection_matches: dict[int, mt.ClusterMatch] = {}
        self.selected: list[int] = []
        self.profiles: dict[int, comm.CommunityProfile] = {}
        self.edge_cases: dict[int, comm.EdgeCaseResult] = {}
        self.accepted: list[int] = []

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.staging / name


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute all stages; see the module docstring for the order.

    Any stage failure aborts with StageFailure; artifacts produced so far
    are kept under ``<output>/failed/``.
    """
    config.validate()
    outdir = config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    staging = outdir / ".staging"
    if staging.exists():
        shutil.rmtree(staging)
    staging.mkdir()
    run = _Run(config, staging)

    stages = [
        ("ingest", _stage_ingest),
        ("cluster-slices", _stage_cluster_slices),
        ("cluster-combined", _stage_cluster_combined),
        ("metrics", _stage_metrics),
        ("match", _stage_match),
        ("coherence", _stage_coherence),
        ("select", _stage_select),
        ("communities", _stage_communities),
        ("shuffle", _stage_shuffle),
        ("report", _stage_report),
    ]
    try:
        for name, fn in stages:
            log.info("pipeline stage: %s", name)
            try:
                fn(run)
            except Exception as exc:
                raise StageFailure(name, exc) from exc
        manifest = _write_manifest(run, stages=[n for n, _ in stages])
    except StageFailure:
        failed = outdir / "failed"
        if failed.exists():
            shutil.rmtree(failed)
        staging.rename(failed)
        raise
    for item in staging.iterdir():
        target = outdir / item.name
        if target.exists():
            target.unlink()
        item.rename(target)
    staging.rmdir()
    return PipelineResult(output_dir=outdir, manifest=manifest,
                          selected=run.selected, accepted_communities=run.accepted)


def _write_manifest(run: _Run, stages: list[str]) -> dict:
    inputs = {}
    for s in run.config.slices:
        inputs[str(s.edges)] = _sha256(s.edges)
        inputs[str(s.metadata)] = _sha256(s.metadata)
    if run.config.stopwords_path:
        inputs[str(run.config.stopwords_path)] = _sha256(run.config.stopwords_path)
    manifest = {
        "config": run.config.to_json(),
        "master_seed": run.config.seed,
        "slice_labels": [s.label for s in run.config.slices],
        "stages": stages,
        "inputs": inputs,
        "artifacts": {},
        "selected_clusters": run.selected,
        "accepted_communities": run.accepted,
    }
    for name in sorted(set(run.artifacts)):
        manifest["artifacts"][name] = _sha256(run.staging / name)
    (run.staging / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


# -- stages --------------------------------------------------------------


def _stage_ingest(run: _Run) -> None:
    for spec in run.config.slices:
        ds = gs.Dataset.from_files(spec.label, spec.edges, spec.metadata)
        run.datasets[spec.label] = ds
        summary = {
            "label": ds.label,
            "nodes": ds.graph.n_nodes,
            "edges": ds.graph.n_edges,
            "records": len(ds.records),
            "stub_records": ds.stub_records,
            "dropped_self_loops": ds.graph.ingest_stats.dropped_self_loops
            if ds.graph.ingest_stats else 0,
            "dropped_duplicates": ds.graph.ingest_stats.dropped_duplicates
            if ds.graph.ingest_stats else 0,
        }
        run.path(f"ingest_{_safe(ds.label)}.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    run.combined = gs.union_datasets(list(run.datasets.values()))


def _stage_cluster_slices(run: _Run) -> None:
    for label, ds in run.datasets.items():
        mcl_c = mcl_cluster(ds.graph, run.config.mcl, dataset_label=label)
        run.mcl_slices[label] = mcl_c
        cl.write_clustering(mcl_c, run.path(f"mcl_{_safe(label)}.tsv"))
        run.artifacts.append(f"mcl_{_safe(label)}.tsv.json")
        k = run.config.mkkm_k if run.config.mkkm_k is not None else choose_k(mcl_c)
        params = MkkmParams(k=k, coarsen_until=run.config.mkkm_coarsen_until,
                            refine_iterations=run.config.mkkm_refine_iterations,
                            seed=derive_seed(run.config.seed, f"mkkm:{label}"))
        mkkm_c = mkkm_cluster(ds.graph, params, dataset_label=label)
        run.mkkm_slices[label] = mkkm_c
        cl.write_clustering(mkkm_c, run.path(f"mkkm_{_safe(label)}.tsv"))
        run.artifacts.append(f"mkkm_{_safe(label)}.tsv.json")


def _stage_cluster_combined(run: _Run) -> None:
    assert run.combined is not None
    mcl_c = mcl_cluster(run.combined.graph, run.config.mcl, dataset_label="combined")
    run.mcl_combined = mcl_c
    cl.write_clustering(mcl_c, run.path("mcl_combined.tsv"))
    run.artifacts.append("mcl_combined.tsv.json")


def _stage_metrics(run: _Run) -> None:
    jobs: list[tuple[str, gs.CitationGraph, cl.Clustering]] = []
    for label, ds in run.datasets.items():
        jobs.append((f"mcl_{_safe(label)}", ds.graph, run.mcl_slices[label]))
        jobs.append((f"mkkm_{_safe(label)}", ds.graph, run.mkkm_slices[label]))
    assert run.combined is not None and run.mcl_combined is not None
    jobs.append(("mcl_combined", run.combined.graph, run.mcl_combined))
    for key, graph, clustering in jobs:
        table = mx.metrics_table(graph, clustering)
        run.metrics[key] = table
        mx.write_metrics_csv(table, run.path(f"metrics_{key}.csv"))


def _stage_match(run: _Run) -> None:
    assert run.mcl_combined is not None
    run.combined_to_slice = mt.match_all(run.mcl_combined, run.mcl_slices)
    mt.write_matches_csv(run.combined_to_slice,
                         run.path("match_combined_to_slices.csv"))
    for label in run.datasets:
        pair = mt.match_all(run.mcl_slices[label], {label: run.mkkm_slices[label]})
        run.pair_matches[label] = pair
        mt.write_matches_csv(pair, run.path(f"match_mcl_mkkm_{_safe(label)}.csv"))


def _coherence_for(run: _Run, scorer: coh.CoherenceScorer, key: str,
                   clustering: cl.Clustering) -> dict[int, coh.CoherenceResult]:
    eligible = []
    for cid in range(clustering.n_clusters):
        members = clustering.pubids(cid)
        texted = scorer.texted_count(members)
        if texted >= scorer.MIN_CLUSTER_SIZE:
            eligible.append((cid, members, texted))
    scorer.prepare(n for _, _, n in eligible)  # single-writer before parallel reads

    def one(job):
        cid, members, _ = job
        try:
            return scorer.coherence(cid, members)
        except coh.CoherenceError:
            return None

    if run.config.threads > 1 and len(eligible) > 1:
        with ThreadPoolExecutor(max_workers=run.config.threads) as pool:
            results = list(pool.map(one, eligible))
    else:
        results = [one(job) for job in eligible]
    table = {r.cluster_id: r for r in results if r is not None}
    coh.write_coherence_csv([table[cid] for cid in sorted(table)],
                            run.path(f"coherence_{key}.csv"))
    return table


def _stage_coherence(run: _Run) -> None:
    assert run.combined is not None and run.mcl_combined is not None
    stopwords = (coh.load_stopwords(run.config.stopwords_path)
                 if run.config.stopwords_path else coh.default_stopwords())
    scorer = coh.CoherenceScorer(run.combined.records.values(), stopwords,
                                 seed=derive_seed(run.config.seed, "coherence"),
                                 reps=run.config.coherence_reps)
    run.coherence["mcl_combined"] = _coherence_for(
        run, scorer, "mcl_combined", run.mcl_combined)
    for label in run.datasets:
        run.coherence[f"mcl_{_safe(label)}"] = _coherence_for(
            run, scorer, f"mcl_{_safe(label)}", run.mcl_slices[label])
        run.coherence[f"mkkm_{_safe(label)}"] = _coherence_for(
            run, scorer, f"mkkm_{_safe(label)}", run.mkkm_slices[label])


def _stage_select(run: _Run) -> None:
    """Chain each combined cluster to its slice-MCL match and that cluster's
    MKKM pair; the pair's jaccard feeds the selection filter."""
    assert run.mcl_combined is not None
    pair_by_slice: dict[str, dict[int, mt.ClusterMatch]] = {
        label: {m.source_cluster_id: m for m in matches}
        for label, matches in run.pair_matches.items()}
    for match in run.combined_to_slice:
        cid = match.source_cluster_id
        if match.target_cluster_id < 0:
            run.selection_matches[cid] = match  # jaccard 0, never selected
            continue
        pair = pair_by_slice[match.target_label].get(match.target_cluster_id)
        if pair is None:
            run.selection_matches[cid] = mt.ClusterMatch(
                source_cluster_id=cid, target_label=match.target_label,
                target_cluster_id=-1, intersection=0, jaccard=0.0, proportion=0.0)
        else:
            run.selection_matches[cid] = mt.ClusterMatch(
                source_cluster_id=cid, target_label=match.target_label,
                target_cluster_id=pair.target_cluster_id,
                intersection=pair.intersection, jaccard=pair.jaccard,
                proportion=pair.proportion)
    run.selected = mt.select_candidates(
        run.mcl_combined, run.metrics["mcl_combined"].by_id(),
        run.selection_matches, run.config.selection)
    run.path("selected_clusters.txt").write_text(
        "".join(f"{cid}\n" for cid in run.selected), encoding="utf-8")


def _stage_communities(run: _Run) -> None:
    assert run.combined is not None and run.mcl_combined is not None
    graph = run.combined.graph
    records = run.combined.records
    rows = []
    for cid in run.selected:
        members = run.mcl_combined.members(cid)
        run.edge_cases[cid] = comm.classify_edge_case(members, graph)
        run.profiles[cid] = comm.build_profile(members, records, graph, cluster_id=cid)
        ec = run.edge_cases[cid]
        rows.append([cid, ec.label.value, ec.size, ec.external_edges,
                     ec.max_intra_citing, ec.max_intra_cited])
    with run.path("edge_cases.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster_id", "label", "size", "external_edges",
                    "max_intra_citing", "max_intra_cited"])
        w.writerows(rows)
    accepted, _rejected = comm.filter_communities(run.profiles, run.edge_cases)
    run.accepted = [cid for cid, _ in accepted]
    comm.write_profiles_jsonl(run.profiles, run.edge_cases,
                              run.path("profiles.jsonl"))
    distribution, summary = comm.author_cluster_distribution(
        run.mcl_combined.pubid_sets(), records)
    payload = {"summary": summary.to_json(),
               "clusters_per_author": dict(sorted(distribution.items()))}
    run.path("author_distribution.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _stage_shuffle(run: _Run) -> None:
    if run.config.shuffle_swaps <= 0:
        return
    assert run.combined is not None
    shuffled, report = shuffle_citations(
        run.combined.graph, run.config.shuffle_swaps,
        seed=derive_seed(run.config.seed, "shuffle"))
    write_edges_tsv(shuffled, run.path("shuffled_edges.tsv"))
    write_shuffle_report(report, run.path("shuffle_report.json"))


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def _stage_report(run: _Run) -> None:
    table1_rows = []
    labels = [s.label for s in run.config.slices] + ["combined"]
    for label in labels:
        key = "mcl_combined" if label == "combined" else f"mcl_{_safe(label)}"
        summary = run.metrics[key].summary
        coherences = [r.coherence for r in run.coherence.get(key, {}).values()]
        mean_coh = sum(coherences) / len(coherences) if coherences else None
        table1_rows.append([label, summary.n_clusters, summary.n_articles,
                            _fmt(summary.mean_size), _fmt(summary.median_size),
                            _fmt(summary.mean_conductance), _fmt(mean_coh)])
    with run.path("table1.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE1_HEADER)
        w.writerows(table1_rows)

    table3_rows = []
    for cid in run.selected:
        chain = run.selection_matches[cid]
        label = chain.target_label
        combined_match = next(m for m in run.combined_to_slice
                              if m.source_cluster_id == cid)
        m_id = combined_match.target_cluster_id
        g_id = chain.target_cluster_id
        m_metrics = run.metrics[f"mcl_{_safe(label)}"].by_id()[m_id]
        g_metrics = run.metrics[f"mkkm_{_safe(label)}"].by_id()[g_id]
        m_coh = run.coherence[f"mcl_{_safe(label)}"].get(m_id)
        g_coh = run.coherence[f"mkkm_{_safe(label)}"].get(g_id)
        table3_rows.append([
            label, m_metrics.size, g_metrics.size,
            _fmt(m_metrics.conductance), _fmt(g_metrics.conductance),
            _fmt(m_coh.coherence if m_coh else None),
            _fmt(g_coh.coherence if g_coh else None),
            m_metrics.internal_edges, g_metrics.internal_edges,
            _fmt(chain.jaccard)])
    with run.path("table3.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE3_HEADER)
        w.writerows(table3_rows)


# -- report regeneration from a completed run dir -----------------------


def report_tables(run_dir: str | Path, out_dir: str | Path | None = None) -> tuple[Path, Path]:
    """Rebuild table1.csv and table3.csv from a completed run's artifacts.

    Reads the manifest for slice labels and the stage CSVs; raises if a
    required artifact is missing.
    """
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"missing artifact: {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    labels = manifest["slice_labels"]
    selected = manifest["selected_clusters"]

    def need(name: str) -> Path:
        p = run_dir / name
        if not p.is_file():
            raise FileNotFoundError(f"missing artifact: {name}")
        return p

    coherence_of: dict[str, dict[int, coh.CoherenceResult]] = {}
    metrics_of: dict[str, mx.MetricsTable] = {}
    for label in labels + ["combined"]:
        for engine in (("mcl", "mkkm") if label != "combined" else ("mcl",)):
            key = f"{engine}_combined" if label == "combined" else f"{engine}_{_safe(label)}"
            metrics_of[key] = mx.read_metrics_csv(need(f"metrics_{key}.csv"))
            table = coh.read_coherence_csv(need(f"coherence_{key}.csv"))
            coherence_of[key] = {int(r.cluster_id): r for r in table}

    table1 = out_dir / "table1.csv"
    with table1.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE1_HEADER)
        for label in labels + ["combined"]:
            key = "mcl_combined" if label == "combined" else f"mcl_{_safe(label)}"
            s = metrics_of[key].summary
            coherences = [r.coherence for r in coherence_of[key].values()]
            mean_coh = sum(coherences) / len(coherences) if coherences else None
            w.writerow([label, s.n_clusters, s.n_articles, _fmt(s.mean_size),
                        _fmt(s.median_size), _fmt(s.mean_conductance), _fmt(mean_coh)])

    combined_matches = {m.source_cluster_id: m for m in
                        mt.read_matches_csv(need("match_combined_to_slices.csv"))}
    pair_matches = {label: {m.source_cluster_id: m for m in
                            mt.read_matches_csv(need(f"match_mcl_mkkm_{_safe(label)}.csv"))}
                    for label in labels}
    table3 = out_dir / "table3.csv"
    with table3.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE3_HEADER)
        for cid in selected:
            cmatch = combined_matches[cid]
            label = cmatch.target_label
            pair = pair_matches[label][cmatch.target_cluster_id]
            m_id, g_id = cmatch.target_cluster_id, pair.target_cluster_id
            m_metrics = metrics_of[f"mcl_{_safe(label)}"].by_id()[m_id]
            g_metrics = metrics_of[f"mkkm_{_safe(label)}"].by_id()[g_id]
            m_coh = coherence_of[f"mcl_{_safe(label)}"].get(m_id)
            g_coh = coherence_of[f"mkkm_{_safe(label)}"].get(g_id)
            w.writerow([label, m_metrics.size, g_metrics.size,
                        _fmt(m_metrics.conductance), _fmt(g_metrics.conductance),
                        _fmt(m_coh.coherence if m_coh else None),
                        _fmt(g_coh.coherence if g_coh else None),
                        m_metrics.internal_edges, g_metrics.internal_edges,
                        _fmt(pair.jaccard)])
    return table1, table3
