"""Batch command line interface.

One subcommand per pipeline stage, sharing the file formats of the full
``pipeline`` run. Exit codes: 0 success, 1 validation error (bad config,
missing file, bad value), 2 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import clustering as cl
from . import coherence as coh
from . import communities as comm
from . import graphstore as gs
from . import matching as mt
from . import metrics as mx
from .mcl import MclParams, mcl_cluster
from .mkkm import MkkmParams, mkkm_cluster
from .pipeline import (ConfigError, PipelineConfig, StageFailure, report_tables,
                       run_pipeline, write_edges_tsv)
from .shuffle import shuffle_citations, write_shuffle_report

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_STAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citecomm",
        description="Cluster citation graphs with two engines, score and match "
                    "clusters, and extract author communities.")
    parser.add_argument("--version", action="version", version=f"citecomm {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate a dataset, write a summary")
    p.add_argument("--edges", required=True, type=Path)
    p.add_argument("--metadata", required=True, type=Path)
    p.add_argument("--label", required=True)
    p.add_argument("--out", required=True, type=Path, help="summary JSON path")

    p = sub.add_parser("cluster-mcl", help="Markov clustering of an edge file")
    p.add_argument("--edges", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="clustering TSV path")
    p.add_argument("--label", default="")
    p.add_argument("--expansion", type=int, default=2)
    p.add_argument("--inflation", type=float, default=2.0)
    p.add_argument("--prune-threshold", type=float, default=1e-4)
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--epsilon", type=float, default=1e-6)

    p = sub.add_parser("cluster-mkkm", help="multilevel kernel k-means clustering")
    p.add_argument("--edges", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--label", default="")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int, help="target cluster count")
    group.add_argument("--auto-from", type=Path, metavar="MCL_TSV",
                       help="set k to half this MCL clustering's cluster count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refine-iterations", type=int, default=10)
    p.add_argument("--coarsen-until", type=int, default=None)

    p = sub.add_parser("metrics", help="conductance and edge counts per cluster")
    p.add_argument("--edges", required=True, type=Path)
    p.add_argument("--clusters", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("coherence", help="textual coherence per cluster")
    p.add_argument("--metadata", required=True, type=Path,
                   help="corpus metadata (JSON-lines); also the baseline corpus")
    p.add_argument("--clusters", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--stopwords", type=Path, default=None)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("match", help="best-match source clusters to target clusterings")
    p.add_argument("--source", required=True, type=Path)
    p.add_argument("--target", required=True, action="append", metavar="LABEL=TSV",
                   help="repeatable; e.g. --target 1990=mcl_1990.tsv")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("shuffle", help="degree-preserving citation shuffling")
    p.add_argument("--edges", required=True, type=Path)
    p.add_argument("--swaps", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path,
                   help="shuffled edge TSV; report goes to <out>.json")

    p = sub.add_parser("communities", help="profiles and edge-case labels for clusters")
    p.add_argument("--edges", required=True, type=Path)
    p.add_argument("--metadata", required=True, type=Path)
    p.add_argument("--clusters", required=True, type=Path)
    p.add_argument("--out-prefix", required=True, type=Path,
                   help="writes <prefix>profiles.jsonl, <prefix>edge_cases.csv, "
                        "<prefix>author_distribution.json")
    p.add_argument("--external-threshold", type=int, default=50)
    p.add_argument("--hub-fraction", type=float, default=0.9)

    p = sub.add_parser("pipeline", help="run the full workflow from a config file")
    p.add_argument("--config", required=True, type=Path)

    p = sub.add_parser("report", help="rebuild the summary tables from a run directory")
    p.add_argument("--run", required=True, type=Path)
    p.add_argument("--out-dir", type=Path, default=None)
    return parser


def _load_graph_and_clustering(edges: Path, clusters: Path) -> tuple[gs.CitationGraph, cl.Clustering]:
    graph = gs.load_edges(edges)
    clustering = cl.read_clustering(clusters, graph.node_ids)
    return graph, clustering


def _cmd_ingest(args) -> int:
    ds = gs.Dataset.from_files(args.label, args.edges, args.metadata)
    stats = ds.graph.ingest_stats
    summary = {
        "label": ds.label,
        "nodes": ds.graph.n_nodes,
        "edges": ds.graph.n_edges,
        "records": len(ds.records),
        "stub_records": ds.stub_records,
        "dropped_self_loops": stats.dropped_self_loops if stats else 0,
        "dropped_duplicates": stats.dropped_duplicates if stats else 0,
    }
    args.out.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    print(f"ingested {ds.label}: {ds.graph.n_nodes} nodes, {ds.graph.n_edges} edges")
    return EXIT_OK


def _cmd_cluster_mcl(args) -> int:
    params = MclParams(expansion=args.expansion, inflation=args.inflation,
                       prune_threshold=args.prune_threshold,
                       max_iterations=args.max_iterations,
                       convergence_epsilon=args.epsilon)
    graph = gs.load_edges(args.edges)
    clustering = mcl_cluster(graph, params, dataset_label=args.label)
    cl.write_clustering(clustering, args.out)
    print(f"mcl: {clustering.n_clusters} clusters "
          f"(converged={clustering.provenance.converged})")
    return EXIT_OK


def _cmd_cluster_mkkm(args) -> int:
    graph = gs.load_edges(args.edges)
    if args.k is not None:
        k = args.k
    else:
        table = cl.read_cluster_table(args.auto_from)
        k = max(1, -(-len(table) // 2))
    params = MkkmParams(k=k, coarsen_until=args.coarsen_until,
                        refine_iterations=args.refine_iterations, seed=args.seed)
    clustering = mkkm_cluster(graph, params, dataset_label=args.label)
    cl.write_clustering(clustering, args.out)
    print(f"mkkm: {clustering.n_clusters} clusters (k={k})")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    graph, clustering = _load_graph_and_clustering(args.edges, args.clusters)
    table = mx.metrics_table(graph, clustering)
    mx.write_metrics_csv(table, args.out)
    s = table.summary
    print(f"metrics: {s.n_clusters} clusters, mean size {s.mean_size:.2f}, "
          f"mean conductance {s.mean_conductance:.4f}")
    return EXIT_OK


def _cmd_coherence(args) -> int:
    records = gs.load_metadata(args.metadata)
    stopwords = (coh.load_stopwords(args.stopwords) if args.stopwords
                 else coh.default_stopwords())
    scorer = coh.CoherenceScorer(records.values(), stopwords, seed=args.seed,
                                 reps=args.reps)
    results = []
    for cid, pubs in enumerate(cl.read_cluster_table(args.clusters)):
        try:
            results.append(scorer.coherence(cid, pubs))
        except coh.CoherenceError as exc:
            log.info("cluster %d skipped: %s", cid, exc)
    coh.write_coherence_csv(results, args.out)
    print(f"coherence: {len(results)} clusters scored")
    return EXIT_OK


def _cmd_match(args) -> int:
    source = cl.clustering_from_table(args.source)
    targets = {}
    for spec in args.target:
        if "=" not in spec:
            raise ConfigError(f"--target needs LABEL=TSV, got {spec!r}")
        label, _, path = spec.partition("=")
        targets[label] = cl.clustering_from_table(Path(path), label=label)
    matches = mt.match_all(source, targets)
    mt.write_matches_csv(matches, args.out)
    print(f"match: {len(matches)} source clusters matched")
    return EXIT_OK


def _cmd_shuffle(args) -> int:
    graph = gs.load_edges(args.edges)
    shuffled, report = shuffle_citations(graph, args.swaps, args.seed)
    write_edges_tsv(shuffled, args.out)
    write_shuffle_report(report, Path(str(args.out) + ".json"))
    print(f"shuffle: {report.performed_swaps} performed, "
          f"{report.rejected_swaps} rejected")
    return EXIT_OK


def _cmd_communities(args) -> int:
    graph = gs.load_edges(args.edges)
    records = dict(gs.load_metadata(args.metadata))
    for pub_id in graph.node_ids:
        records.setdefault(pub_id, gs.PubRecord(pub_id=pub_id, slice="unknown"))
    clustering = cl.read_clustering(args.clusters, graph.node_ids)
    thresholds = comm.EdgeCaseThresholds(external_threshold=args.external_threshold,
                                         hub_fraction=args.hub_fraction)
    prefix = args.out_prefix
    prefix.parent.mkdir(parents=True, exist_ok=True)
    profiles = {}
    labels = {}
    with Path(f"{prefix}edge_cases.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster_id", "label", "size", "external_edges",
                    "max_intra_citing", "max_intra_cited"])
        for cid in range(clustering.n_clusters):
            members = clustering.members(cid)
            labels[cid] = comm.classify_edge_case(members, graph, thresholds)
            profiles[cid] = comm.build_profile(members, records, graph, cluster_id=cid)
            ec = labels[cid]
            w.writerow([cid, ec.label.value, ec.size, ec.external_edges,
                        ec.max_intra_citing, ec.max_intra_cited])
    comm.write_profiles_jsonl(profiles, labels, Path(f"{prefix}profiles.jsonl"))
    distribution, summary = comm.author_cluster_distribution(
        clustering.pubid_sets(), records)
    Path(f"{prefix}author_distribution.json").write_text(
        json.dumps({"summary": summary.to_json(),
                    "clusters_per_author": dict(sorted(distribution.items()))},
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")
    accepted = sum(1 for ec in labels.values() if ec.label is comm.EdgeCase.NORMAL)
    print(f"communities: {len(profiles)} profiles, {accepted} accepted")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = PipelineConfig.from_file(args.config)
    result = run_pipeline(config)
    print(f"pipeline: {len(result.manifest['artifacts'])} artifacts in "
          f"{result.output_dir}; {len(result.selected)} selected clusters, "
          f"{len(result.accepted_communities)} communities accepted")
    return EXIT_OK


def _cmd_report(args) -> int:
    t1, t3 = report_tables(args.run, args.out_dir)
    print(f"report: wrote {t1} and {t3}")
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "cluster-mcl": _cmd_cluster_mcl,
    "cluster-mkkm": _cmd_cluster_mkkm,
    "metrics": _cmd_metrics,
    "coherence": _cmd_coherence,
    "match": _cmd_match,
    "shuffle": _cmd_shuffle,
    "communities": _cmd_communities,
    "pipeline": _cmd_pipeline,
    "report": _cmd_report,
}

_VALIDATION_ERRORS = (ConfigError, FileNotFoundError, gs.GraphStoreError,
                      cl.ClusteringError, ValueError)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (mx.MetricsError, coh.CoherenceError, mt.MatchingError,
            comm.CommunityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
