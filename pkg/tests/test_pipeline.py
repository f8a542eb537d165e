"""Batch runners: synthesis, composition, resume, worker determinism,
and file-based evaluation."""

import json
from pathlib import Path

import pytest

from vinegraft.compositing import ComposeConfig, CompositeRecord
from vinegraft.errors import EmptyBufferError, VinegraftError
from vinegraft.pipeline import (
    export_cutouts,
    run_compose,
    run_eval,
    run_ingest,
    run_synth,
)


def tree_bytes(directory: Path) -> dict[str, bytes]:
    return {
        p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()
    }


def predictions_from_labels(label_dir: Path, pred_dir: Path, conf: str = "1.000000"):
    pred_dir.mkdir(parents=True, exist_ok=True)
    for label in label_dir.glob("*.txt"):
        lines = []
        for line in label.read_text().splitlines():
            parts = line.split()
            lines.append(f"{parts[0]} {conf} {' '.join(parts[1:])}")
        (pred_dir / label.name).write_text("".join(f"{l}\n" for l in lines))


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scenes")
    run_synth(out, n_scenes=6, master_seed=77, width=240, height=180,
              n_instances=4, size_range=(40, 80))
    return out


@pytest.fixture(scope="module")
def cutouts_dir(tmp_path_factory, synth_dir):
    out = tmp_path_factory.mktemp("cutouts")
    export_cutouts(synth_dir, out)
    return out


class TestRunSynth:
    def test_outputs_per_scene(self, synth_dir):
        rgbs = sorted(synth_dir.glob("*.rgb.png"))
        insts = sorted(synth_dir.glob("*.inst.png"))
        jsons = sorted(synth_dir.glob("*.scene.json"))
        assert len(rgbs) == len(insts) == len(jsons) == 6

    def test_level_counts_and_ids(self, synth_dir):
        summary = run_synth(
            synth_dir.parent / "again", n_scenes=6, master_seed=77,
            width=240, height=180, n_instances=4, size_range=(40, 80),
        )
        assert summary.level_counts == {"low": 1, "medium": 2, "high": 2, "backlight": 1}
        assert summary.scene_ids[0] == "scene_00000_low"
        assert summary.scene_ids[-1] == "scene_00005_backlight"

    def test_byte_identical_reruns(self, tmp_path):
        kw = dict(n_scenes=4, master_seed=5, width=160, height=120,
                  n_instances=3, size_range=(30, 60))
        run_synth(tmp_path / "a", **kw)
        run_synth(tmp_path / "b", **kw)
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_scene_json_echoes_spec(self, synth_dir):
        payload = json.loads((synth_dir / "scene_00000_low.scene.json").read_text())
        assert payload["scene_id"] == "scene_00000_low"
        assert payload["spec"]["lighting_level"] == "low"
        assert payload["spec"]["seed"] == 77  # master 77 XOR index 0

    def test_explicit_level_counts(self, tmp_path):
        summary = run_synth(
            tmp_path / "lv", n_scenes=0, master_seed=1, width=160, height=120,
            n_instances=2, size_range=(30, 60),
            level_counts={"low": 2, "backlight": 1},
        )
        assert summary.level_counts == {"low": 2, "medium": 0, "high": 0, "backlight": 1}
        assert len(summary.scene_ids) == 3

    def test_worker_parity(self, tmp_path):
        kw = dict(n_scenes=5, master_seed=9, width=160, height=120,
                  n_instances=3, size_range=(30, 60))
        run_synth(tmp_path / "w1", workers=1, **kw)
        run_synth(tmp_path / "w2", workers=3, **kw)
        assert tree_bytes(tmp_path / "w1") == tree_bytes(tmp_path / "w2")


class TestExportAndIngest:
    def test_export_counts(self, synth_dir, tmp_path):
        n = export_cutouts(synth_dir, tmp_path / "cuts", limit=5)
        assert n == 5
        assert len(list((tmp_path / "cuts").glob("*.rgb.png"))) == 5

    def test_ingest_summary(self, cutouts_dir):
        summary = run_ingest(cutouts_dir)
        assert summary.count > 0
        assert Path(summary.manifest_path).exists()
        assert len(summary.manifest_digest) == 64


class TestRunCompose:
    def test_happy_path(self, synth_dir, cutouts_dir, tmp_path):
        out = tmp_path / "composed"
        summary = run_compose(synth_dir, cutouts_dir, out, master_seed=77)
        assert summary.n_scenes == 6
        assert summary.n_composed == 6
        assert summary.n_failed == 0
        manifest = json.loads(Path(summary.manifest_path).read_text())
        assert manifest["seed"] == 77
        assert len(manifest["images"]) == 6
        for entry in manifest["images"]:
            assert (out / entry["image"]).exists()
            assert (out / entry["label"]).exists()
            assert (out / entry["record"]).exists()

    def test_label_count_matches_record(self, synth_dir, cutouts_dir, tmp_path):
        out = tmp_path / "composed"
        run_compose(synth_dir, cutouts_dir, out, master_seed=3)
        for record_path in out.glob("*.record.json"):
            record = CompositeRecord.from_dict(json.loads(record_path.read_text()))
            label_path = out / record_path.name.replace(".record.json", ".txt")
            n_labels = len([l for l in label_path.read_text().splitlines() if l.strip()])
            assert n_labels == record.n_pasted

    def test_missing_buffer_raises(self, synth_dir, tmp_path):
        with pytest.raises((EmptyBufferError, OSError)):
            run_compose(synth_dir, tmp_path / "nowhere", tmp_path / "out")

    def test_empty_scene_dir_raises(self, cutouts_dir, tmp_path):
        empty = tmp_path / "noscenes"
        empty.mkdir()
        with pytest.raises(VinegraftError):
            run_compose(empty, cutouts_dir, tmp_path / "out")

    def test_worker_parity(self, synth_dir, cutouts_dir, tmp_path):
        run_compose(synth_dir, cutouts_dir, tmp_path / "w1", master_seed=4, workers=1)
        run_compose(synth_dir, cutouts_dir, tmp_path / "w2", master_seed=4, workers=3)
        assert tree_bytes(tmp_path / "w1") == tree_bytes(tmp_path / "w2")

    def test_resume_completes_missing_scenes(self, synth_dir, cutouts_dir, tmp_path):
        full = tmp_path / "full"
        run_compose(synth_dir, cutouts_dir, full, master_seed=6)
        partial = tmp_path / "partial"
        run_compose(synth_dir, cutouts_dir, partial, master_seed=6)
        removed = 0
        for stem in ("scene_00001_medium", "scene_00004_high"):
            for suffix in (".rgb.png", ".txt", ".record.json"):
                (partial / f"{stem}{suffix}").unlink()
                removed += 1
        assert removed == 6
        summary = run_compose(
            synth_dir, cutouts_dir, partial, master_seed=6, resume=True
        )
        assert summary.n_composed == 6
        assert tree_bytes(full) == tree_bytes(partial)

    def test_feather_config_respected(self, synth_dir, cutouts_dir, tmp_path):
        hard = tmp_path / "hard"
        soft = tmp_path / "soft"
        run_compose(synth_dir, cutouts_dir, hard, master_seed=8)
        run_compose(
            synth_dir, cutouts_dir, soft, master_seed=8,
            config=ComposeConfig(feather_radius=3),
        )
        assert tree_bytes(hard) != tree_bytes(soft)


class TestRunEval:
    def test_gt_as_predictions_is_perfect(self, synth_dir, cutouts_dir, tmp_path):
        out = tmp_path / "composed"
        run_compose(synth_dir, cutouts_dir, out, master_seed=11)
        preds = tmp_path / "preds"
        predictions_from_labels(out, preds)
        report = run_eval(preds, out, out_dir=tmp_path / "report")
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)
        assert (report.map50, report.map50_95) == (1.0, 1.0)
        payload = json.loads((tmp_path / "report" / "report.json").read_text())
        assert payload["counts"]["fp"] == 0
        table = (tmp_path / "report" / "report.txt").read_text()
        assert "mAP50-95" in table

    def test_empty_predictions(self, synth_dir, cutouts_dir, tmp_path):
        out = tmp_path / "composed"
        run_compose(synth_dir, cutouts_dir, out, master_seed=12)
        empty = tmp_path / "empty_preds"
        empty.mkdir()
        report = run_eval(empty, out)
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.map50 == 0.0
        assert report.fn > 0

    def test_no_ground_truth_raises(self, tmp_path):
        gt = tmp_path / "gt"
        gt.mkdir()
        with pytest.raises(VinegraftError):
            run_eval(tmp_path, gt)

    def test_malformed_prediction_line(self, synth_dir, cutouts_dir, tmp_path):
        out = tmp_path / "composed"
        run_compose(synth_dir, cutouts_dir, out, master_seed=13)
        preds = tmp_path / "badpreds"
        preds.mkdir()
        stem = next(out.glob("*.txt")).name
        (preds / stem).write_text("0 0.5 0.5 0.1\n")
        with pytest.raises(ValueError):
            run_eval(preds, out)

    def test_seed_echoed_into_report(self, synth_dir, cutouts_dir, tmp_path):
        out = tmp_path / "composed"
        run_compose(synth_dir, cutouts_dir, out, master_seed=14)
        preds = tmp_path / "preds"
        predictions_from_labels(out, preds)
        run_eval(preds, out, out_dir=tmp_path / "rep", master_seed=14)
        payload = json.loads((tmp_path / "rep" / "report.json").read_text())
        assert payload["seed"] == 14
