from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from g2tpipe.cli import main as cli_main
from g2tpipe.extraction import ReplayClient
from g2tpipe.graphs import Triplet, TripletSet, GraphTextPair
from g2tpipe.pipeline import (
    STAGES,
    ConfigError,
    Manifest,
    PipelineRun,
    ResumeConflict,
    StageError,
    canonical_hash,
    changed_keys,
    linearize_for_training,
    load_config,
    split_dataset,
)
from g2tpipe.records import read_jsonl

DATA_DIR = Path(__file__).parent / "data"

PINNED_N = 15
PINNED_N_PRIME = 12


def e2e_config(out_dir: Path, seed: int = 17) -> dict:
    return {
        "run": {"out_dir": str(out_dir), "seed": seed},
        "ingest": {"input": str(DATA_DIR / "e2e_articles.jsonl"), "format": "jsonl"},
        "extract": {
            "replay": str(DATA_DIR / "e2e_replay.jsonl"),
            "model": "replay-stub",
            "parallelism": 4,
        },
        "score": {"backend": "lexical"},
        "filter": {"threshold": 0.3},
    }


def artifact_hashes(out_dir: Path) -> dict[str, str]:
    """SHA-256 of every artifact; manifest.json is run metadata (it carries
    wall-clock timestamps) and is excluded from the determinism contract."""
    hashes = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_dir() or path.name == "manifest.json":
            continue
        hashes[str(path.relative_to(out_dir))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return hashes


class CountingClient:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def complete(self, sentence_id, prompt, params):
        self.calls += 1
        return self.inner.complete(sentence_id, prompt, params)


class CrashingClient(CountingClient):
    def __init__(self, inner, crash_at: int):
        super().__init__(inner)
        self.crash_at = crash_at

    def complete(self, sentence_id, prompt, params):
        if self.calls + 1 == self.crash_at:
            raise RuntimeError("injected abort")
        return super().complete(sentence_id, prompt, params)


def replay_client() -> ReplayClient:
    return ReplayClient.from_file(DATA_DIR / "e2e_replay.jsonl")


class TestStageMechanics:
    def test_count_chaining_and_totals(self, tmp_path):
        run = PipelineRun(e2e_config(tmp_path / "run"))
        run.run_all()
        manifest = run.manifest
        assert manifest.n == PINNED_N
        assert manifest.n_prime == PINNED_N_PRIME
        for previous, current in zip(STAGES, STAGES[1:]):
            assert (
                manifest.stages[current]["input_count"]
                == manifest.stages[previous]["output_count"]
            )
        assert manifest.n_prime <= manifest.n

    def test_rerun_completed_stage_is_noop(self, tmp_path):
        config = e2e_config(tmp_path / "run")
        PipelineRun(config).run_all()
        client = CountingClient(replay_client())
        resumed = PipelineRun(config, client=client)
        record = resumed.run_stage("extract")
        assert client.calls == 0
        assert record["output_count"] == 13

    def test_stage_requires_predecessor(self, tmp_path):
        run = PipelineRun(e2e_config(tmp_path / "run"))
        with pytest.raises(StageError, match="requires completed stage"):
            run.run_stage("extract")

    def test_config_edit_refused_with_changed_keys(self, tmp_path):
        config = e2e_config(tmp_path / "run")
        run = PipelineRun(config)
        run.run_stage("ingest")
        edited = e2e_config(tmp_path / "run")
        edited["filter"]["threshold"] = 0.5
        with pytest.raises(ResumeConflict, match="filter.threshold"):
            PipelineRun(edited)

    def test_unknown_stage_is_config_error(self, tmp_path):
        run = PipelineRun(e2e_config(tmp_path / "run"))
        with pytest.raises(ConfigError):
            run.run_stage("mystery")

    def test_manifest_round_trips(self, tmp_path):
        config = e2e_config(tmp_path / "run")
        run = PipelineRun(config)
        run.run_stage("ingest")
        loaded = Manifest.load(run.manifest_path)
        assert loaded.stages["ingest"]["output_count"] == PINNED_N
        assert loaded.config_hash == canonical_hash(config)


class TestEndToEnd:
    def test_two_runs_byte_identical(self, tmp_path):
        first, second = tmp_path / "one", tmp_path / "two"
        PipelineRun(e2e_config(first)).run_all()
        PipelineRun(e2e_config(second)).run_all()
        assert artifact_hashes(first) == artifact_hashes(second)

    def test_rejection_reasons_all_exercised(self, tmp_path):
        out = tmp_path / "run"
        PipelineRun(e2e_config(out)).run_all()
        report = json.loads((out / "ingest_report.json").read_text(encoding="utf-8"))
        assert report["rejections"] == {
            "EmptyAfterCleanup": 1,
            "NoSentenceFound": 1,
            "PronounInitial": 1,
            "TooLong": 1,
            "TooShort": 1,
        }

    def test_abort_and_resume_matches_uninterrupted_run(self, tmp_path):
        clean, crashed = tmp_path / "clean", tmp_path / "crashed"
        PipelineRun(e2e_config(clean)).run_all()

        config = e2e_config(crashed)
        run = PipelineRun(config, client=CrashingClient(replay_client(), crash_at=7))
        run.run_stage("ingest")
        with pytest.raises(StageError, match="injected abort"):
            run.run_stage("extract")
        resumed = PipelineRun(config, client=CountingClient(replay_client()))
        resumed.run_all()
        assert artifact_hashes(clean) == artifact_hashes(crashed)

    def test_abort_at_several_points_converges(self, tmp_path):
        clean = tmp_path / "clean"
        PipelineRun(e2e_config(clean)).run_all()
        expected = artifact_hashes(clean)
        for crash_at in (1, 5, 13):
            out = tmp_path / f"crash{crash_at}"
            config = e2e_config(out)
            run = PipelineRun(config, client=CrashingClient(replay_client(), crash_at))
            run.run_stage("ingest")
            with pytest.raises(StageError):
                run.run_stage("extract")
            PipelineRun(config, client=replay_client()).run_all()
            assert artifact_hashes(out) == expected

    def test_abort_inside_atomic_stage_write_leaves_no_partial_artifact(self, tmp_path, monkeypatch):
        clean, crashed = tmp_path / "clean", tmp_path / "crashed"
        PipelineRun(e2e_config(clean)).run_all()

        config = e2e_config(crashed)
        run = PipelineRun(config, client=replay_client())
        run.run_stage("ingest")
        run.run_stage("extract")

        from g2tpipe import pipeline as pipeline_mod

        def exploding_score_pairs(pairs, cfg, session=None):
            raise RuntimeError("mid-write abort")

        monkeypatch.setattr(pipeline_mod.scoring, "score_pairs", exploding_score_pairs)
        with pytest.raises(StageError, match="mid-write abort"):
            run.run_stage("score")
        monkeypatch.undo()
        assert not (crashed / "scored.jsonl").exists()

        PipelineRun(config, client=replay_client()).run_all()
        assert artifact_hashes(crashed) == artifact_hashes(clean)

    def test_all_pronoun_fixture_completes_with_zero_n(self, tmp_path):
        articles = tmp_path / "articles.jsonl"
        rows = [
            {"id": f"p{i}", "title": "", "text": "It is a pronoun-initial sentence. More."}
            for i in range(4)
        ]
        articles.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
        config = e2e_config(tmp_path / "run")
        config["ingest"]["input"] = str(articles)
        run = PipelineRun(config, client=ReplayClient({}))
        run.run_all()
        assert run.manifest.n == 0
        assert run.manifest.n_prime == 0
        assert (tmp_path / "run" / "train.source").read_text(encoding="utf-8") == ""


class TestLinearizeForTraining:
    def test_canonical_pair(self, tmp_path):
        graph = TripletSet(
            (Triplet("Arròs negre", "country", "Spain"), Triplet("Spain", "ethnic Group", "Spaniards"))
        )
        pair = GraphTextPair("s1", graph, "Arros negre is from Spain where Spaniards are an ethnic group.")
        source, target = tmp_path / "train.source", tmp_path / "train.target"
        count = linearize_for_training([pair], source, target)
        assert count == 1
        assert source.read_text(encoding="utf-8").rstrip("\n") == (
            "(<S> Arròs negre| <P> country| <O> Spain), (<S> Spain| <P> ethnic Group| <O> Spaniards)"
        )
        assert target.read_text(encoding="utf-8").rstrip("\n") == (
            "Arros negre is from Spain where Spaniards are an ethnic group."
        )

    def test_alignment_and_ordering(self, tmp_path):
        pairs = [
            GraphTextPair(f"id-{i:03d}", TripletSet((Triplet("a", "b", f"c{i}"),)), f"Text number {i}.")
            for i in range(100)
        ]
        reversed_input = list(reversed(pairs))
        source, target = tmp_path / "s", tmp_path / "t"
        linearize_for_training(reversed_input, source, target)
        source_lines = source.read_text(encoding="utf-8").splitlines()
        target_lines = target.read_text(encoding="utf-8").splitlines()
        assert len(source_lines) == len(target_lines) == 100
        assert target_lines[0] == "Text number 0."
        assert source_lines[0].endswith("<O> c0)")


class TestSplitUtility:
    def test_counts_and_disjointness(self):
        items = [{"i": i} for i in range(100)]
        train, test = split_dataset(items, 70, 20, seed=5)
        assert len(train) == 70 and len(test) == 20
        train_ids = {r["i"] for r in train}
        test_ids = {r["i"] for r in test}
        assert not train_ids & test_ids

    def test_seeded_determinism(self):
        items = [{"i": i} for i in range(50)]
        assert split_dataset(items, 30, 10, seed=9) == split_dataset(items, 30, 10, seed=9)

    def test_insufficient_pool(self):
        with pytest.raises(ValueError):
            split_dataset([1, 2, 3], 3, 1, seed=0)


class TestConfigHandling:
    def test_env_overrides(self, tmp_path):
        config_path = tmp_path / "c.toml"
        config_path.write_text("[run]\nout_dir = 'x'\nseed = 1\n", encoding="utf-8")
        loaded = load_config(config_path, env={"G2TPIPE__run__seed": "42"})
        assert loaded["run"]["seed"] == 42

    def test_malformed_toml_is_config_error(self, tmp_path):
        config_path = tmp_path / "c.toml"
        config_path.write_text("[run\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(config_path)

    def test_changed_keys_lists_nested_paths(self):
        old = {"a": {"b": 1, "c": 2}, "d": 3}
        new = {"a": {"b": 1, "c": 9}, "d": 3, "e": 4}
        assert changed_keys(old, new) == ["a.c", "e"]


class TestCli:
    def _write_config(self, tmp_path: Path) -> Path:
        out = tmp_path / "run"
        config_path = tmp_path / "config.toml"
        config_path.write_text(
            "\n".join(
                [
                    "[run]",
                    f'out_dir = "{out}"',
                    "seed = 17",
                    "[ingest]",
                    f'input = "{DATA_DIR / "e2e_articles.jsonl"}"',
                    "[extract]",
                    f'replay = "{DATA_DIR / "e2e_replay.jsonl"}"',
                    'model = "replay-stub"',
                    "[score]",
                    'backend = "lexical"',
                    "[filter]",
                    "threshold = 0.3",
                ]
            ),
            encoding="utf-8",
        )
        return config_path

    def test_pipeline_run_and_stage_chaining(self, tmp_path):
        runner = CliRunner()
        config_path = self._write_config(tmp_path)
        result = runner.invoke(cli_main, ["pipeline", "run", "--config", str(config_path)])
        assert result.exit_code == 0, result.output
        assert "n=15, n'=12" in result.output

    def test_single_stage_invocation(self, tmp_path):
        runner = CliRunner()
        config_path = self._write_config(tmp_path)
        result = runner.invoke(
            cli_main, ["pipeline", "run", "--config", str(config_path), "--stage", "ingest"]
        )
        assert result.exit_code == 0, result.output
        assert "stage ingest: in=20 out=15" in result.output

    def test_resume_conflict_exit_code(self, tmp_path):
        runner = CliRunner()
        config_path = self._write_config(tmp_path)
        runner.invoke(cli_main, ["pipeline", "run", "--config", str(config_path), "--stage", "ingest"])
        edited = config_path.read_text(encoding="utf-8").replace("threshold = 0.3", "threshold = 0.4")
        config_path.write_text(edited, encoding="utf-8")
        result = runner.invoke(cli_main, ["pipeline", "run", "--config", str(config_path)])
        assert result.exit_code == 4

    def test_config_error_exit_code(self, tmp_path):
        runner = CliRunner()
        bad = tmp_path / "bad.toml"
        bad.write_text("[run\n", encoding="utf-8")
        result = runner.invoke(cli_main, ["pipeline", "run", "--config", str(bad)])
        assert result.exit_code == 2

    def test_stage_failure_exit_code(self, tmp_path):
        runner = CliRunner()
        config_path = self._write_config(tmp_path)
        # point scoring at an unreachable remote endpoint
        text = config_path.read_text(encoding="utf-8").replace(
            'backend = "lexical"',
            'backend = "remote"\nendpoint = "http://127.0.0.1:9"\ntimeout = 0.2',
        )
        config_path.write_text(text, encoding="utf-8")
        result = runner.invoke(cli_main, ["pipeline", "run", "--config", str(config_path)])
        assert result.exit_code == 3
        assert "stage failure" in result.output

    def test_standalone_command_chain(self, tmp_path):
        runner = CliRunner()
        sentences = tmp_path / "sentences.jsonl"
        result = runner.invoke(
            cli_main,
            ["ingest", "--input", str(DATA_DIR / "e2e_articles.jsonl"), "--out", str(sentences)],
        )
        assert result.exit_code == 0, result.output
        assert len(read_jsonl(sentences)) == PINNED_N

        extract_dir = tmp_path / "extract"
        result = runner.invoke(
            cli_main,
            [
                "extract", "--sentences", str(sentences),
                "--replay", str(DATA_DIR / "e2e_replay.jsonl"),
                "--out-dir", str(extract_dir), "--parallelism", "2",
            ],
        )
        assert result.exit_code == 0, result.output

        scored = tmp_path / "scored.jsonl"
        result = runner.invoke(
            cli_main,
            ["score", "--in", str(extract_dir / "pairs.jsonl"), "--backend", "lexical", "--out", str(scored)],
        )
        assert result.exit_code == 0, result.output

        curated, noise = tmp_path / "curated.jsonl", tmp_path / "noise.jsonl"
        result = runner.invoke(
            cli_main,
            [
                "filter", "--in", str(scored), "--threshold", "0.3",
                "--out-curated", str(curated), "--out-noise", str(noise),
                "--diagnostics", str(tmp_path / "diags.jsonl"),
            ],
        )
        assert result.exit_code == 0, result.output
        assert len(read_jsonl(curated)) == PINNED_N_PRIME

        report = tmp_path / "stats.json"
        result = runner.invoke(
            cli_main,
            ["stats", "--in", str(curated), "--report", str(report), "--dist", str(tmp_path / "d.csv")],
        )
        assert result.exit_code == 0, result.output

        result = runner.invoke(
            cli_main,
            [
                "linearize", "--in", str(curated),
                "--source", str(tmp_path / "train.source"), "--target", str(tmp_path / "train.target"),
            ],
        )
        assert result.exit_code == 0, result.output
        assert len((tmp_path / "train.source").read_text(encoding="utf-8").splitlines()) == PINNED_N_PRIME

    def test_sheet_judge_aggregate_chain(self, tmp_path):
        runner = CliRunner()
        pairs_path = tmp_path / "pairs.jsonl"
        rows = []
        for m in (1, 2, 3, 4, 6):
            for i in range(8):
                rows.append(
                    {
                        "sentence_id": f"{m}-{i}",
                        "text": f"Sample sentence {m} {i} with several extra words.",
                        "triplets": [{"s": f"e{i}", "p": f"p{j}", "o": f"v{j}"} for j in range(m)],
                    }
                )
        pairs_path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")

        sheet_path = tmp_path / "sheet.csv"
        result = runner.invoke(
            cli_main,
            ["sheet", "--in", str(pairs_path), "--quota", "3", "--seed", "7", "--out", str(sheet_path)],
        )
        assert result.exit_code == 0, result.output

        prompts_path = tmp_path / "prompts.jsonl"
        result = runner.invoke(
            cli_main, ["judge-prompts", "--sheet", str(sheet_path), "--out", str(prompts_path)]
        )
        assert result.exit_code == 0, result.output
        prompts = read_jsonl(prompts_path)
        assert len(prompts) == 15
        assert all("A. Unused Triplet" in p["prompt"] for p in prompts)

        from g2tpipe.evalsheets import Annotation, read_sheet_csv, write_annotations_csv

        sheet = read_sheet_csv(sheet_path)
        annotations = [
            Annotation(item.item_id, evaluator, frozenset(), ())
            for evaluator in ("e1", "e2")
            for item in sheet.items[:4]
        ]
        ann_path = tmp_path / "ann.csv"
        write_annotations_csv(annotations, ann_path)
        report_path = tmp_path / "report.json"
        result = runner.invoke(
            cli_main,
            [
                "aggregate", "--sheet", str(sheet_path), "--annotations", str(ann_path),
                "--report", str(report_path),
            ],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(report_path.read_text(encoding="utf-8"))
        assert payload["unused_triplet_mean"] == 0.0

    def test_mix_command_rejects_mixed_backends(self, tmp_path):
        runner = CliRunner()
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        row = {
            "sentence_id": "x", "text": "Words here.",
            "triplets": [{"s": "a", "p": "b", "o": "c"}], "score": 0.5,
        }
        a.write_text(json.dumps({**row, "backend": "lexical"}) + "\n", encoding="utf-8")
        b.write_text(json.dumps({**row, "backend": "remote:m"}) + "\n", encoding="utf-8")
        result = runner.invoke(
            cli_main,
            ["mix", "--curated", str(a), "--noise", str(b), "--pct", "50", "--total", "2", "--out", str(tmp_path / "o")],
        )
        assert result.exit_code == 2
        assert "mixed scorer backends" in result.output
