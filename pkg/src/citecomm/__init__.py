"""citecomm: convergent clustering of citation graphs into author communities."""

__version__ = "0.1.0"

from .clustering import Clustering, Provenance
from .coherence import CoherenceResult, CoherenceScorer, jsd, normalize_text
from .communities import (CommunityProfile, EdgeCase, EdgeCaseResult,
                          author_cluster_distribution, build_profile,
                          classify_edge_case, filter_communities)
from .graphstore import (CitationGraph, Dataset, PubRecord, induced_subgraph,
                         load_edges, load_metadata, union_datasets)
from .matching import (ClusterMatch, SelectionCriteria, best_match, jaccard,
                       match_all, select_candidates)
from .mcl import MclParams, mcl_cluster
from .metrics import (ClusterMetrics, conductance, internal_edges, metrics_table,
                      weighted_citation_count)
from .mkkm import MkkmParams, choose_k, mkkm_cluster
from .pipeline import PipelineConfig, run_pipeline
from .shuffle import ShuffleReport, shuffle_citations

__all__ = [
    "CitationGraph", "Clustering", "ClusterMatch", "ClusterMetrics",
    "CoherenceResult", "CoherenceScorer", "CommunityProfile", "Dataset",
    "EdgeCase", "EdgeCaseResult", "MclParams", "MkkmParams", "PipelineConfig",
    "Provenance", "PubRecord", "SelectionCriteria", "ShuffleReport",
    "author_cluster_distribution", "best_match", "build_profile",
    "choose_k", "classify_edge_case", "conductance", "filter_communities",
    "induced_subgraph", "internal_edges", "jaccard", "jsd", "load_edges",
    "load_metadata", "match_all", "mcl_cluster", "metrics_table",
    "mkkm_cluster", "normalize_text", "run_pipeline", "select_candidates",
    "shuffle_citations", "union_datasets", "weighted_citation_count",
]
