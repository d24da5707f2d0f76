"""CLI dispatch, exit codes, and end-to-end mock workflows."""

import json

import pytest

from fedbench.cli import dispatch
from fedbench.humanstudy import PairTask, sample_pairs
from fedbench.records import (
    EditResult,
    Granularity,
    load_manifest,
    save_manifest,
)
from fedbench.tasks import VoteRecord

from conftest import build_benchmark
from test_records import make_card


def write_config(tmp_path, extra=""):
    path = tmp_path / "fed.yaml"
    path.write_text(
        f"paths: {{cache_dir: '{tmp_path / 'cache'}'}}\n" + extra
    )
    return str(path)


class TestDispatchBasics:
    def test_validate_ok_exit_zero(self, tmp_path, capsys):
        build_benchmark(tmp_path / "bench", 2)
        code = dispatch(["validate", "--benchmark",
                         str(tmp_path / "bench" / "benchmark.manifest")])
        assert code == 0
        assert "ok: 2 samples" in capsys.readouterr().out

    def test_unknown_subcommand_exit_two(self, capsys):
        assert dispatch(["frobnicate"]) == 2

    def test_missing_required_flag_named(self, tmp_path, capsys):
        code = dispatch(["evaluate", "--benchmark", "b", "--granularity", "simple",
                         "--out", str(tmp_path)])
        assert code == 2
        assert "--model" in capsys.readouterr().err

    def test_no_subcommand_exit_two(self, capsys):
        assert dispatch([]) == 2

    def test_help_env_lists_vars(self, capsys):
        assert dispatch(["--help-env"]) == 0
        out = capsys.readouterr().out
        for name in ("FED_CONFIG", "FED_CACHE_DIR", "FED_JUDGE_API_KEY",
                     "FED_EDITOR_API_KEY"):
            assert name in out

    def test_config_error_exit_three(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("nonsense_key: 1\n")
        assert dispatch(["--config", str(bad), "validate", "--benchmark", "x"]) == 3

    def test_workflow_error_exit_one(self, tmp_path):
        assert dispatch(["validate", "--benchmark", str(tmp_path / "missing")]) == 1


class TestEvaluateWorkflow:
    def test_evaluate_then_leaderboard(self, tmp_path, capsys):
        bench = tmp_path / "bench"
        build_benchmark(bench, 3)
        config = write_config(tmp_path)
        out = tmp_path / "out"
        code = dispatch(["--config", config, "evaluate",
                         "--benchmark", str(bench / "benchmark.manifest"),
                         "--model", "identity", "--granularity", "simple",
                         "--out", str(out)])
        assert code == 0
        results = load_manifest(out / "results.identity.simple", "results")
        cards = load_manifest(out / "scorecards.identity.simple", "scorecards")
        assert len(results) == len(cards) == 3
        meta = json.loads((out / "run.meta").read_text())
        assert meta["command"] == "evaluate"
        assert meta["deterministic"] is True
        assert "config_hash" in meta and "seed" in meta

        code = dispatch(["leaderboard", "--scores",
                         str(out / "scorecards.identity.simple")])
        assert code == 0
        table = capsys.readouterr().out
        assert "| identity |" in table
        assert "## simple instructions" in table

    def test_dense_run_skips_missing_instructions(self, tmp_path):
        bench = tmp_path / "bench"
        build_benchmark(bench, 2, with_dense=False)
        config = write_config(tmp_path)
        out = tmp_path / "out"
        code = dispatch(["--config", config, "evaluate",
                         "--benchmark", str(bench / "benchmark.manifest"),
                         "--model", "patch", "--granularity", "dense",
                         "--out", str(out)])
        assert code == 0
        failures = load_manifest(out / "failures.patch.dense", "failures")
        assert len(failures) == 2


class TestBuildWorkflow:
    def test_build_writes_outputs(self, tmp_path):
        from fedbench.images import synthetic_portrait, write_image
        from fedbench.pipeline import SourceRecord
        from fedbench.records import EmotionLabel

        src_dir = tmp_path / "sources"
        sources = []
        for i in range(2):
            ref = write_image(synthetic_portrait(i, size=(16, 16)),
                              src_dir / f"s{i}.png", src_dir)
            sources.append(SourceRecord(source_id=f"s{i}", image=ref,
                                        labeled_emotion=EmotionLabel.HAPPY))
        save_manifest(sources, src_dir / "sources.manifest")
        config = write_config(
            tmp_path,
            "backends:\n"
            "  classifiers:\n"
            + "".join(
                f"    - {{name: scripted, params: {{answer: negative, name: m{i}}}}}\n"
                for i in range(5)
            ),
        )
        out = tmp_path / "out"
        code = dispatch(["--config", config, "build",
                         "--sources", str(src_dir / "sources.manifest"),
                         "--out", str(out)])
        assert code == 0
        tasks = load_manifest(out / "pending_tasks.manifest", "verification_tasks")
        audit = load_manifest(out / "audit.log", "audit")
        # happy sources: 5 negative targets pass with an all-negative ensemble
        assert len(tasks) == 10
        generated = sum(1 for a in audit if a.action == "generated")
        emitted = sum(1 for a in audit if a.action == "emit")
        dropped = sum(1 for a in audit if a.action == "drop" and a.candidate_id)
        assert generated == emitted + dropped == 12


class TestHumanStudyWorkflow:
    def test_report_from_service_style_logs(self, tmp_path, capsys):
        results = []
        for i in range(6):
            for model in ("strong", "weak"):
                results.append(
                    EditResult(
                        sample_id=f"s{i}", model_id=model,
                        granularity=Granularity.SIMPLE,
                        edited=_ref(f"{model}{i}"),
                    )
                )
        pairs = sample_pairs(results, 6, seed=1)
        cards = []
        for i in range(6):
            cards.append(make_card(sample_id=f"s{i}", model_id="strong",
                                   s_fid=0.9, s_align=1.0, s_reg=1.0, fed=0.9))
            cards.append(make_card(sample_id=f"s{i}", model_id="weak",
                                   s_fid=0.1, s_align=1.0, s_reg=1.0, fed=0.1))
        votes = []
        for pair in pairs:
            strong_side = "left" if pair.left.model_id == "strong" else "right"
            for annotator in ("a1", "a2", "a3"):
                votes.append(VoteRecord(
                    task_id=f"{pair.pair_id}.overall", annotator_id=annotator,
                    kind="pairwise", choice=strong_side, perspective="overall",
                    timestamp="2026-01-01T00:00:00+00:00",
                ))
        data = tmp_path / "study"
        data.mkdir()
        save_manifest(pairs, data / "pairs.manifest")
        save_manifest(votes, data / "votes.log")
        save_manifest(cards, data / "scorecards.manifest")
        out = tmp_path / "report"
        code = dispatch(["human-study", "--results", str(data), "--out", str(out)])
        assert code == 0
        rows = load_manifest(out / "report.manifest", "study_report")
        fed_row = next(r for r in rows if r.metric == "fed_score")
        assert fed_row.accuracy == 1.0
        assert (out / "report.md").is_file()


def _ref(name):
    import hashlib

    from fedbench.records import ImageRef

    return ImageRef(path=f"r/{name}.png",
                    content_hash=hashlib.sha256(name.encode()).hexdigest(),
                    width=8, height=8)
