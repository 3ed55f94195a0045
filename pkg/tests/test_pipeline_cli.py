"""Fixture generation, stage composition, caching, CLI behavior, goldens."""

from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from groundtrack import formats
from groundtrack.cli import main
from groundtrack.fixtures import make_fixture
from groundtrack.geometry import iou
from groundtrack.metrics import EvalReport, evaluate
from groundtrack.tracker import TrackerConfig, run_sequence

DATA = Path(__file__).parent / "data"


def read_tree(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestMakeFixture:
    def test_seeded_reproducibility(self, tmp_path):
        a = make_fixture(tmp_path / "a", seed=1)
        b = make_fixture(tmp_path / "b", seed=1)
        assert a == b
        assert read_tree(tmp_path / "a") == read_tree(tmp_path / "b")

    def test_different_seed_changes_detections(self, tmp_path):
        make_fixture(tmp_path / "a", seed=1)
        make_fixture(tmp_path / "b", seed=2)
        assert (tmp_path / "a" / "det" / "synth01.txt").read_bytes() != (
            tmp_path / "b" / "det" / "synth01.txt"
        ).read_bytes()

    def test_ground_truth_structure(self, tmp_path):
        make_fixture(tmp_path / "d", seed=1)
        entries = formats.parse_ground_truth(
            (tmp_path / "d" / "gt.jsonl").read_text()
        )
        assert len(entries) == 3
        assert all(len(e.tracks) == 1 for e in entries)
        # The two walkers cross: their boxes overlap at some frame.
        walker_a, walker_b = entries[0].tracks[0], entries[1].tracks[0]
        assert any(
            iou(walker_a.observations[f], walker_b.observations[f]) > 0
            for f in walker_a.observations
            if f in walker_b.observations
        )

    def test_scores_straddle_thresholds(self, tmp_path):
        make_fixture(tmp_path / "d", seed=1)
        dets = formats.parse_mot_detections(
            (tmp_path / "d" / "det" / "synth01.txt").read_text()
        )
        scores = [d.score for frame in dets.values() for d in frame]
        assert any(s >= 0.7 for s in scores)
        assert any(0.1 <= s < 0.7 for s in scores)

    def test_dropout_recovery_preserves_identity(self, tmp_path):
        make_fixture(tmp_path / "d", seed=1)
        dets = formats.parse_mot_detections(
            (tmp_path / "d" / "det" / "synth01.txt").read_text()
        )
        tracks = run_sequence(dets, TrackerConfig(), "synth01")
        # The stationary object around x=900 keeps one identity across its
        # 3-frame dropout (well under the 30-frame buffer).
        standers = [
            t for t in tracks if abs(t.observations[t.first_frame].left - 900) < 10
        ]
        assert len(standers) == 1
        frames = standers[0].frames
        assert max(b - a for a, b in zip(frames, frames[1:])) == 4  # the gap


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("dataset")
    make_fixture(root, seed=1)
    return root


class TestPipeline:
    def test_end_to_end_deterministic(self, fixture_dir, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert main([
                "pipeline", "--dataset-root", str(fixture_dir),
                "--out", str(out), "--backend", "stub",
            ]) == 0
        assert (out1 / "submission.jsonl").read_bytes() == (
            out2 / "submission.jsonl"
        ).read_bytes()
        assert (out1 / "report.jsonl").read_bytes() == (out2 / "report.jsonl").read_bytes()

    def test_rerun_hits_cache_fully(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "run"
        main(["pipeline", "--dataset-root", str(fixture_dir), "--out", str(out)])
        capsys.readouterr()
        main(["pipeline", "--dataset-root", str(fixture_dir), "--out", str(out)])
        captured = capsys.readouterr()
        summary = json.loads(captured.out.strip().splitlines()[-1])
        assert summary["caption"]["cache_hits"] == summary["caption"]["total"]
        assert summary["caption"]["requested"] == 0

    def test_pipeline_equals_stage_composition(self, fixture_dir, tmp_path):
        full, staged = tmp_path / "full", tmp_path / "staged"
        assert main([
            "pipeline", "--dataset-root", str(fixture_dir), "--out", str(full),
        ]) == 0
        for cmd in ("track", "export", "caption", "retrieve"):
            assert main([
                cmd, "--dataset-root", str(fixture_dir), "--out", str(staged),
            ]) == 0
        assert main([
            "evaluate", "--gt", str(fixture_dir / "gt.jsonl"),
            "--pred", str(staged / "submission.jsonl"),
            "--report", str(staged / "report"),
        ]) == 0
        assert (full / "submission.jsonl").read_bytes() == (
            staged / "submission.jsonl"
        ).read_bytes()
        assert (full / "report.jsonl").read_bytes() == (
            staged / "report.jsonl"
        ).read_bytes()

    def test_import_tracks_feeds_later_stages(self, fixture_dir, tmp_path):
        base, imported = tmp_path / "base", tmp_path / "imported"
        main(["pipeline", "--dataset-root", str(fixture_dir), "--out", str(base)])
        assert main([
            "pipeline", "--dataset-root", str(fixture_dir), "--out", str(imported),
            "--import-tracks", str(base / "tracks"),
        ]) == 0
        assert (base / "tracks" / "synth01.txt").read_bytes() == (
            imported / "tracks" / "synth01.txt"
        ).read_bytes()
        assert (base / "submission.jsonl").read_bytes() == (
            imported / "submission.jsonl"
        ).read_bytes()

    def test_track_counts_match_summary(self, fixture_dir, tmp_path):
        out = tmp_path / "out"
        main(["track", "--dataset-root", str(fixture_dir), "--out", str(out)])
        summary = json.loads((out / "track_summary.json").read_text())
        tracks = formats.parse_mot_tracks(
            (out / "tracks" / "synth01.txt").read_text(), "synth01"
        )
        assert summary == [{"tracks": len(tracks), "video_id": "synth01"}]


class TestCliErrors:
    def test_empty_det_file_is_success(self, tmp_path):
        det = tmp_path / "empty.txt"
        det.write_text("")
        out = tmp_path / "out"
        assert main([
            "track", "--dets", str(det), "--video-id", "v", "--out", str(out),
        ]) == 0
        assert (out / "tracks" / "v.txt").read_text() == ""

    def test_bad_config_path_fails_with_diagnostic(self, tmp_path, capsys):
        det = tmp_path / "d.txt"
        det.write_text("1,-1,0,0,20,20,0.9\n")
        code = main([
            "track", "--dets", str(det), "--video-id", "v",
            "--out", str(tmp_path / "out"), "--config", str(tmp_path / "nope.json"),
        ])
        captured = capsys.readouterr()
        assert code != 0
        assert "error:" in captured.err

    def test_missing_dataset_root_fails(self, tmp_path, capsys):
        code = main([
            "pipeline", "--dataset-root", str(tmp_path / "nowhere"),
            "--out", str(tmp_path / "out"),
        ])
        assert code != 0
        assert "videos.json" in capsys.readouterr().err

    def test_remote_backend_needs_url(self, fixture_dir, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("GROUNDTRACK_ADAPTER_URL", raising=False)
        code = main([
            "pipeline", "--dataset-root", str(fixture_dir),
            "--out", str(tmp_path / "out"), "--backend", "remote",
        ])
        assert code != 0
        assert "adapter" in capsys.readouterr().err.lower()

    def test_malformed_detections_fail_with_line(self, tmp_path, capsys):
        det = tmp_path / "d.txt"
        det.write_text("1,-1,0,0,20,20,0.9\nbroken line\n")
        code = main([
            "track", "--dets", str(det), "--video-id", "v", "--out", str(tmp_path / "o"),
        ])
        assert code != 0
        assert "line 2" in capsys.readouterr().err


class TestGoldenReport:
    def test_committed_fixture_reproduces_golden(self):
        submission = formats.parse_submission((DATA / "submission.jsonl").read_text())
        ground_truth = formats.parse_ground_truth((DATA / "gt.jsonl").read_text())
        report = evaluate(submission, ground_truth)
        golden = EvalReport.from_records((DATA / "golden_report.jsonl").read_text())
        for name in EvalReport.SCALAR_FIELDS:
            assert getattr(report, name) == pytest.approx(
                getattr(golden, name), abs=1e-9
            )
        assert report.recall_grid == golden.recall_grid
        # Byte-stable serialization of the same values.
        assert report.to_records() == (DATA / "golden_report.jsonl").read_text()

    def test_golden_matches_hand_derivation(self):
        import math

        golden = EvalReport.from_records((DATA / "golden_report.jsonl").read_text())
        assert golden.det_a == 75.0
        assert golden.ass_a == 100.0
        assert golden.hota == pytest.approx(100 * (1 + math.sqrt(0.5)) / 2, abs=1e-12)
        assert golden.miou == pytest.approx(100 * (1.0 + 0.375) / 2, abs=1e-12)
        assert golden.m_hiou == pytest.approx(
            (golden.hota + golden.miou) / 2, abs=1e-12
        )

    def test_evaluate_cli_on_golden_fixture(self, tmp_path, capsys):
        code = main([
            "evaluate", "--gt", str(DATA / "gt.jsonl"),
            "--pred", str(DATA / "submission.jsonl"),
            "--report", str(tmp_path / "report"),
        ])
        assert code == 0
        assert (tmp_path / "report.jsonl").read_text() == (
            DATA / "golden_report.jsonl"
        ).read_text()
        assert "m-HIoU" in capsys.readouterr().out
