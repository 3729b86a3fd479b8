#!/usr/bin/env python3
"""Regenerate the bundled toy dataset under data/toy/ (deterministic).

Two 30-article communities with disjoint vocabularies, published in two
year slices (1990, 1991). Six citations cross the communities, so each
slice also carries the cross-cited articles from the other year, the way
amplified year slices overlap. Running the pipeline on toy.cfg must
select and accept exactly the two communities; this script verifies that
before writing.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

OUT = ROOT / "data" / "toy"
SEED = 20260801
RING = 30
EXTRA_EDGE_PROB = 0.35

VOCAB = {
    "A": ["membrane", "receptor", "antigen", "lymphocyte", "cytokine",
          "antibody", "epitope", "macrophage", "interleukin", "histocompat",
          "complement", "immunoglobulin", "thymus", "clonal", "plasma"],
    "B": ["graphene", "lattice", "phonon", "semiconductor", "bandgap",
          "photon", "quantum", "crystal", "electron", "spintronic",
          "nanowire", "dielectric", "substrate", "epitaxy", "doping"],
}
SHARED = ["measurement", "analysis", "model", "experiment", "sample",
          "temperature", "protocol", "observation", "estimate", "parameter"]


def make_community(prefix: str, year: int, rng: np.random.Generator):
    ids = [f"{prefix}{i:02d}" for i in range(RING)]
    edges = set()
    for i in range(RING):  # ring guarantees connectivity
        u, v = i, (i + 1) % RING
        if rng.random() < 0.5:
            u, v = v, u
        edges.add((ids[u], ids[v]))
    for i in range(RING):
        for j in range(i + 1, RING):
            if (j - i) % RING in (1, RING - 1):
                continue
            if rng.random() < EXTRA_EDGE_PROB:
                u, v = (i, j) if rng.random() < 0.5 else (j, i)
                edges.add((ids[u], ids[v]))
    vocab = VOCAB[prefix.upper()[0]] if prefix in ("a", "b") else SHARED
    authors = [f"auth_{prefix}{i:02d}" for i in range(12)]
    records = {}
    for i, pub in enumerate(ids):
        n_auth = int(rng.integers(1, 4))
        chosen = rng.choice(len(authors), size=n_auth, replace=False)
        words = [vocab[int(k)] for k in rng.integers(0, len(vocab), 26)]
        words += [SHARED[int(k)] for k in rng.integers(0, len(SHARED), 6)]
        records[pub] = {
            "pub_id": pub,
            "slice": year,
            "title": " ".join(words[:6]),
            "abstract": " ".join(words[6:]),
            "author_ids": sorted(authors[int(k)] for k in chosen),
        }
    return ids, edges, records


def main() -> int:
    rng = np.random.default_rng(SEED)
    a_ids, a_edges, a_records = make_community("a", 1990, rng)
    b_ids, b_edges, b_records = make_community("b", 1991, rng)
    b_edges.add(("b00", "b01"))  # shared pair must stay connected in slice 1990
    cross = {("a00", "b00")}

    # amplification: slice 1990 carries the cited pair from 1991, and
    # slice 1991 carries the citing article from 1990
    slice_1990_nodes = set(a_ids) | {"b00", "b01"}
    slice_1991_nodes = set(b_ids) | {"a00"}
    all_records = {**a_records, **b_records}
    all_edges = a_edges | b_edges | cross

    def slice_edges(nodes):
        return sorted((u, v) for u, v in all_edges if u in nodes and v in nodes)

    OUT.mkdir(parents=True, exist_ok=True)
    for label, nodes in (("1990", slice_1990_nodes), ("1991", slice_1991_nodes)):
        with (OUT / f"edges_{label}.tsv").open("w", encoding="utf-8") as fh:
            fh.write(f"# toy year-slice {label}: citing<TAB>cited\n")
            for u, v in slice_edges(nodes):
                fh.write(f"{u}\t{v}\n")
        with (OUT / f"metadata_{label}.jsonl").open("w", encoding="utf-8") as fh:
            for pub in sorted(nodes):
                fh.write(json.dumps(all_records[pub], sort_keys=True) + "\n")

    (OUT / "toy.cfg").write_text(
        "[pipeline]\n"
        "seed = 42\n"
        "output = out\n"
        "threads = 1\n"
        "\n"
        "[slice:1990]\n"
        "edges = edges_1990.tsv\n"
        "metadata = metadata_1990.jsonl\n"
        "\n"
        "[slice:1991]\n"
        "edges = edges_1991.tsv\n"
        "metadata = metadata_1991.jsonl\n"
        "\n"
        "[mcl]\n"
        "expansion = 2\n"
        "inflation = 2.0\n"
        "\n"
        "[mkkm]\n"
        "k = auto\n"
        "\n"
        "[selection]\n"
        "min_size = 30\n"
        "max_size = 350\n"
        "max_conductance = 0.5\n"
        "min_jaccard = 0.9\n"
        "\n"
        "[coherence]\n"
        "reps = 50\n"
        "\n"
        "[shuffle]\n"
        "swaps = 500\n",
        encoding="utf-8")

    # verify: the bundled pipeline config must accept exactly the 2 communities
    from citecomm.pipeline import PipelineConfig, run_pipeline

    with tempfile.TemporaryDirectory() as tmp:
        cfg = PipelineConfig.from_file(OUT / "toy.cfg")
        cfg = type(cfg)(**{**cfg.__dict__, "output_dir": Path(tmp) / "out"})
        result = run_pipeline(cfg)
        accepted = result.accepted_communities
        sizes = [len(result.manifest["artifacts"])]
        print(f"verify: selected={result.selected} accepted={accepted} "
              f"artifacts={sizes[0]}")
        if len(accepted) != 2:
            print("FAILED: expected exactly 2 accepted communities", file=sys.stderr)
            return 1
    print(f"toy dataset written to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
