import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from citecomm.cli import main
from citecomm.pipeline import (ConfigError, PipelineConfig, StageFailure,
                               derive_seed, run_pipeline, report_tables,
                               TABLE1_HEADER, TABLE3_HEADER)

TOY = Path(__file__).resolve().parents[1] / "data" / "toy"


@pytest.fixture()
def toy_dir(tmp_path):
    target = tmp_path / "toy"
    shutil.copytree(TOY, target)
    return target


def run_toy(toy_dir):
    config = PipelineConfig.from_file(toy_dir / "toy.cfg")
    return config, run_pipeline(config)


class TestDeriveSeed:
    def test_stable_and_label_sensitive(self):
        assert derive_seed(42, "mkkm:1990") == derive_seed(42, "mkkm:1990")
        assert derive_seed(42, "mkkm:1990") != derive_seed(42, "mkkm:1991")
        assert derive_seed(42, "x") != derive_seed(43, "x")


class TestConfig:
    def test_toy_config_parses(self, toy_dir):
        config = PipelineConfig.from_file(toy_dir / "toy.cfg")
        assert [s.label for s in config.slices] == ["1990", "1991"]
        assert config.mcl.inflation == 2.0
        assert config.seed == 42
        config.validate()

    def test_missing_edge_file_fails_validation_before_stages(self, toy_dir):
        (toy_dir / "edges_1990.tsv").unlink()
        config = PipelineConfig.from_file(toy_dir / "toy.cfg")
        with pytest.raises(ConfigError, match="edges_1990"):
            run_pipeline(config)
        assert not (config.output_dir / "manifest.json").exists()

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineConfig.from_file(tmp_path / "absent.cfg")

    def test_no_slices_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[pipeline]\noutput = out\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="slice"):
            PipelineConfig.from_file(cfg)

    def test_output_dir_from_environment(self, toy_dir, tmp_path, monkeypatch):
        cfg_text = (toy_dir / "toy.cfg").read_text().replace("output = out\n", "")
        (toy_dir / "toy.cfg").write_text(cfg_text, encoding="utf-8")
        monkeypatch.delenv("CITECOMM_OUTPUT", raising=False)
        with pytest.raises(ConfigError, match="CITECOMM_OUTPUT"):
            PipelineConfig.from_file(toy_dir / "toy.cfg")
        monkeypatch.setenv("CITECOMM_OUTPUT", str(tmp_path / "envout"))
        config = PipelineConfig.from_file(toy_dir / "toy.cfg")
        assert config.output_dir == tmp_path / "envout"
        result = run_pipeline(config)
        assert (tmp_path / "envout" / "manifest.json").is_file()
        assert len(result.accepted_communities) == 2

    def test_reserved_combined_label(self, tmp_path, toy_dir):
        cfg = toy_dir / "bad.cfg"
        cfg.write_text(
            "[pipeline]\noutput = out\n[slice:combined]\n"
            "edges = edges_1990.tsv\nmetadata = metadata_1990.jsonl\n",
            encoding="utf-8")
        with pytest.raises(ConfigError, match="reserved"):
            PipelineConfig.from_file(cfg).validate()


class TestToyRun:
    def test_toy_pipeline_accepts_two_communities(self, toy_dir):
        config, result = run_toy(toy_dir)
        assert len(result.selected) == 2
        assert len(result.accepted_communities) == 2
        manifest = json.loads((config.output_dir / "manifest.json").read_text())
        for name in manifest["artifacts"]:
            assert (config.output_dir / name).is_file()
        # every stage left artifacts behind
        names = set(manifest["artifacts"])
        for expected in ("ingest_1990.json", "mcl_1990.tsv", "mkkm_1991.tsv",
                         "mcl_combined.tsv", "metrics_mcl_combined.csv",
                         "match_combined_to_slices.csv", "coherence_mcl_combined.csv",
                         "selected_clusters.txt", "profiles.jsonl",
                         "author_distribution.json", "edge_cases.csv",
                         "shuffled_edges.tsv", "table1.csv", "table3.csv"):
            assert expected in names, expected

    def test_report_headers_exact(self, toy_dir):
        config, _ = run_toy(toy_dir)
        t1 = (config.output_dir / "table1.csv").read_text().splitlines()
        t3 = (config.output_dir / "table3.csv").read_text().splitlines()
        assert t1[0] == ",".join(TABLE1_HEADER)
        assert t3[0] == ",".join(TABLE3_HEADER)
        assert len(t1) == 1 + 3  # 2 slices + combined
        assert len(t3) == 1 + 2  # both communities

    def test_profiles_accepted_flags(self, toy_dir):
        config, result = run_toy(toy_dir)
        lines = (config.output_dir / "profiles.jsonl").read_text().splitlines()
        rows = [json.loads(x) for x in lines]
        assert [r["cluster_id"] for r in rows] == result.selected
        assert all(r["accepted"] for r in rows)
        assert all(r["edge_case"] == "Normal" for r in rows)

    def test_report_regeneration_matches(self, toy_dir, tmp_path):
        config, _ = run_toy(toy_dir)
        out = tmp_path / "regen"
        out.mkdir()
        t1, t3 = report_tables(config.output_dir, out)
        assert t1.read_text() == (config.output_dir / "table1.csv").read_text()
        assert t3.read_text() == (config.output_dir / "table3.csv").read_text()

    def test_report_missing_artifact_named(self, toy_dir, tmp_path):
        config, _ = run_toy(toy_dir)
        (config.output_dir / "metrics_mcl_combined.csv").unlink()
        with pytest.raises(FileNotFoundError, match="metrics_mcl_combined"):
            report_tables(config.output_dir, tmp_path)

    def test_threads_do_not_change_artifacts(self, toy_dir, tmp_path):
        config, result = run_toy(toy_dir)
        threaded_dir = tmp_path / "toy2"
        shutil.copytree(TOY, threaded_dir)
        cfg = (threaded_dir / "toy.cfg").read_text().replace(
            "threads = 1", "threads = 4")
        (threaded_dir / "toy.cfg").write_text(cfg, encoding="utf-8")
        config2 = PipelineConfig.from_file(threaded_dir / "toy.cfg")
        assert config2.threads == 4
        run_pipeline(config2)
        for name in result.manifest["artifacts"]:
            assert (config2.output_dir / name).read_bytes() == \
                (config.output_dir / name).read_bytes(), name

    def test_stage_failure_keeps_partial_artifacts_under_failed(self, toy_dir):
        # corrupt one metadata file: ingest parses it and must abort
        meta = toy_dir / "metadata_1991.jsonl"
        meta.write_text(meta.read_text() + "not json\n", encoding="utf-8")
        config = PipelineConfig.from_file(toy_dir / "toy.cfg")
        with pytest.raises(StageFailure) as err:
            run_pipeline(config)
        assert err.value.stage == "ingest"
        failed = config.output_dir / "failed"
        assert failed.is_dir()
        assert (failed / "ingest_1990.json").is_file()


class TestCli:
    def test_pipeline_and_exit_codes(self, toy_dir, capsys):
        assert main(["pipeline", "--config", str(toy_dir / "toy.cfg")]) == 0
        out = capsys.readouterr().out
        assert "2 communities accepted" in out

    def test_validation_error_exit_code(self, toy_dir, capsys):
        (toy_dir / "metadata_1990.jsonl").unlink()
        assert main(["pipeline", "--config", str(toy_dir / "toy.cfg")]) == 1

    def test_stage_failure_exit_code(self, toy_dir):
        meta = toy_dir / "metadata_1991.jsonl"
        meta.write_text(meta.read_text() + "{bad\n", encoding="utf-8")
        assert main(["pipeline", "--config", str(toy_dir / "toy.cfg")]) == 2

    def test_unknown_flag_usage_error(self, toy_dir):
        with pytest.raises(SystemExit) as err:
            main(["pipeline", "--config", str(toy_dir / "toy.cfg"), "--bogus"])
        assert err.value.code != 0

    def test_single_stage_subcommands_share_formats(self, toy_dir, tmp_path):
        edges = str(toy_dir / "edges_1990.tsv")
        meta = str(toy_dir / "metadata_1990.jsonl")
        out = tmp_path

        assert main(["ingest", "--edges", edges, "--metadata", meta,
                     "--label", "1990", "--out", str(out / "ingest.json")]) == 0
        summary = json.loads((out / "ingest.json").read_text())
        assert summary["nodes"] == 32

        assert main(["cluster-mcl", "--edges", edges, "--label", "1990",
                     "--inflation", "2.0", "--expansion", "2",
                     "--out", str(out / "mcl.tsv")]) == 0
        sidecar = json.loads((out / "mcl.tsv.json").read_text())
        assert sidecar["params"]["inflation"] == 2.0

        assert main(["cluster-mkkm", "--edges", edges,
                     "--auto-from", str(out / "mcl.tsv"), "--seed", "3",
                     "--out", str(out / "mkkm.tsv")]) == 0

        assert main(["metrics", "--edges", edges,
                     "--clusters", str(out / "mcl.tsv"),
                     "--out", str(out / "metrics.csv")]) == 0
        header = (out / "metrics.csv").read_text().splitlines()[0]
        assert header == "cluster_id,size,internal_edges,cut_edges,conductance"

        assert main(["coherence", "--metadata", meta,
                     "--clusters", str(out / "mcl.tsv"), "--reps", "5",
                     "--seed", "1", "--out", str(out / "coherence.csv")]) == 0
        header = (out / "coherence.csv").read_text().splitlines()[0]
        assert header == "cluster_id,n_used,jsd_cluster,jsd_random,coherence"

        assert main(["match", "--source", str(out / "mcl.tsv"),
                     "--target", f"1990={out / 'mkkm.tsv'}",
                     "--out", str(out / "matches.csv")]) == 0
        header = (out / "matches.csv").read_text().splitlines()[0]
        assert header == "source_id,target_label,target_id,intersection,jaccard,proportion"

        assert main(["shuffle", "--edges", edges, "--swaps", "100",
                     "--seed", "7", "--out", str(out / "shuffled.tsv")]) == 0
        report = json.loads((out / "shuffled.tsv.json").read_text())
        assert report["requested_swaps"] == 100
        assert report["seed"] == 7

        assert main(["communities", "--edges", edges, "--metadata", meta,
                     "--clusters", str(out / "mcl.tsv"),
                     "--out-prefix", str(out / "comm_")]) == 0
        assert (out / "comm_profiles.jsonl").is_file()
        assert (out / "comm_edge_cases.csv").is_file()
        assert (out / "comm_author_distribution.json").is_file()

    def test_console_script_entrypoint(self):
        proc = subprocess.run([sys.executable, "-m", "citecomm.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "citecomm" in proc.stdout

    def test_cross_process_determinism(self, tmp_path):
        # rerun the same config in separate processes with distinct
        # PYTHONHASHSEED values: artifact bytes must not depend on set/dict
        # iteration order
        import os
        workdir = tmp_path / "toy"
        shutil.copytree(TOY, workdir)
        snapshots = []
        for hashseed in ("1", "2"):
            env = dict(os.environ, PYTHONHASHSEED=hashseed)
            proc = subprocess.run(
                [sys.executable, "-m", "citecomm.cli", "pipeline",
                 "--config", str(workdir / "toy.cfg")],
                capture_output=True, text=True, env=env)
            assert proc.returncode == 0, proc.stderr
            out = workdir / "out"
            snapshots.append({p.name: p.read_bytes() for p in out.iterdir()})
        assert snapshots[0].keys() == snapshots[1].keys()
        for name in snapshots[0]:
            assert snapshots[0][name] == snapshots[1][name], \
                f"{name} differs across hash seeds"
