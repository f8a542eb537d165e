"""Batch runners behind the service endpoints.

Scene files: ``<scene_id>.rgb.png`` + ``<scene_id>.inst.png`` (16-bit id
map) + ``<scene_id>.scene.json``.  Composed datasets: per scene a
``.rgb.png`` image, a ``.txt`` label file, and a ``.record.json`` paste
record, plus one ``dataset.json`` manifest.

Every runner is deterministic under (inputs, master seed): per-scene RNG
streams are derived as ``master_seed XOR scene_index`` with scenes indexed
in sorted id order, each worker task writes only its own scene's files,
and manifests are assembled in sorted order afterwards, so outputs are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import imio
from .buffer import derive_seed, ingest_buffer, make_rng
from .compositing import ComposeConfig, compose_scene
from .errors import VinegraftError
from .labeling import (
    DetectionLabel,
    bbox_from_label,
    emit_labels,
    parse_instance_map,
    parse_label_lines,
)
from .metrics import (
    ALL_POINTS,
    DEFAULT_CONF_THRESH,
    DEFAULT_IOU_THRESH,
    Detection,
    EvalReport,
    evaluate,
    report_table,
)
from .scenes import LIGHTING_LEVELS, SynthSceneSpec, apportion_counts, synth_scene

RGB_SUFFIX = ".rgb.png"
INST_SUFFIX = ".inst.png"
SCENE_JSON_SUFFIX = ".scene.json"
LABEL_SUFFIX = ".txt"
RECORD_SUFFIX = ".record.json"
DATASET_MANIFEST = "dataset.json"

_REFERENCE_DIMS = (1000, 1000)


@dataclass
class IngestSummary:
    count: int
    manifest_digest: str
    manifest_path: str
    skipped: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class SynthSummary:
    out_dir: str
    scene_ids: list[str]
    level_counts: dict[str, int]


@dataclass
class ComposeSummary:
    out_dir: str
    n_scenes: int
    n_composed: int
    n_failed: int
    failed: list[tuple[str, str]] = field(default_factory=list)
    manifest_path: str = ""


def run_ingest(buffer_dir, min_cutout_area: int = 64) -> IngestSummary:
    buf = ingest_buffer(buffer_dir, min_cutout_area=min_cutout_area)
    return IngestSummary(
        count=len(buf),
        manifest_digest=buf.manifest_digest,
        manifest_path=str(Path(buffer_dir) / "buffer.json"),
        skipped=list(buf.skipped),
    )


def _synth_one(out_dir: str, scene_id: str, spec: SynthSceneSpec) -> str:
    rgb, _, imap = synth_scene(spec)
    out = Path(out_dir)
    imio.write_rgb(out / f"{scene_id}{RGB_SUFFIX}", rgb)
    imio.write_instance_map(out / f"{scene_id}{INST_SUFFIX}", imap)
    payload = {"scene_id": scene_id, "spec": asdict(spec)}
    (out / f"{scene_id}{SCENE_JSON_SUFFIX}").write_text(
        json.dumps(payload, indent=2, sort_keys=True)
    )
    return scene_id


def run_synth(
    out_dir,
    n_scenes: int,
    master_seed: int = 0,
    width: int = 640,
    height: int = 480,
    n_instances: int = 6,
    size_range: Optional[tuple[int, int]] = None,
    level_counts: Optional[dict[str, int]] = None,
    workers: int = 1,
) -> SynthSummary:
    """Render ``n_scenes`` scenes swept across the four exposure levels.

    Default level counts follow the built-in exposure mix by
    largest-remainder apportionment; an explicit ``level_counts`` mapping
    overrides both the split and ``n_scenes``.  The default instance size
    range is (60, 140) px, shrunk proportionally for small frames.
    """
    out = imio.ensure_dir(out_dir)
    if size_range is None:
        short_side = min(width, height)
        lo = min(60, max(12, int(0.25 * short_side)))
        hi = min(140, max(lo, int(0.45 * short_side)))
        size_range = (lo, hi)
    levels = list(LIGHTING_LEVELS)
    if level_counts is None:
        counts = apportion_counts(n_scenes)
        level_counts = dict(zip(levels, counts))
    else:
        unknown = set(level_counts) - set(levels)
        if unknown:
            raise ValueError(f"unknown lighting levels: {sorted(unknown)}")
        level_counts = {lv: int(level_counts.get(lv, 0)) for lv in levels}

    tasks = []
    index = 0
    for level in levels:
        for _ in range(level_counts[level]):
            scene_id = f"scene_{index:05d}_{level}"
            spec = SynthSceneSpec(
                width=width,
                height=height,
                n_instances=n_instances,
                size_range=size_range,
                lighting_level=level,
                seed=derive_seed(master_seed, index),
            )
            tasks.append((scene_id, spec))
            index += 1

    if workers <= 1 or len(tasks) <= 1:
        scene_ids = [_synth_one(str(out), sid, spec) for sid, spec in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scene_ids = list(
                pool.map(_synth_one, [str(out)] * len(tasks), *zip(*tasks))
            )
    return SynthSummary(out_dir=str(out), scene_ids=scene_ids, level_counts=level_counts)


_WORKER_BUFFER = None


def _compose_worker_init(buffer_dir: str, min_cutout_area: int) -> None:
    global _WORKER_BUFFER
    _WORKER_BUFFER = ingest_buffer(
        buffer_dir, min_cutout_area=min_cutout_area, write_manifest=False
    )


def _compose_one(
    scenes_dir: str,
    out_dir: str,
    scene_id: str,
    index: int,
    master_seed: int,
    cfg: ComposeConfig,
    resume: bool,
) -> tuple[str, str, int, int, str]:
    """Compose one scene; returns (scene_id, status, width, height, error)."""
    out = Path(out_dir)
    out_rgb = out / f"{scene_id}{RGB_SUFFIX}"
    out_label = out / f"{scene_id}{LABEL_SUFFIX}"
    out_record = out / f"{scene_id}{RECORD_SUFFIX}"
    if resume and out_rgb.exists() and out_label.exists() and out_record.exists():
        existing = imio.read_rgb(out_rgb)
        return scene_id, "exists", existing.shape[1], existing.shape[0], ""
    try:
        rgb = imio.read_rgb(Path(scenes_dir) / f"{scene_id}{RGB_SUFFIX}")
        imap = imio.read_instance_map(Path(scenes_dir) / f"{scene_id}{INST_SUFFIX}")
        instances = parse_instance_map(imap)
        seed = derive_seed(master_seed, index)
        composed, record = compose_scene(
            rgb,
            instances,
            _WORKER_BUFFER,
            make_rng(seed),
            cfg,
            scene_id=scene_id,
            seed=seed,
        )
        pasted_ids = {e.instance_id for e in record.entries if not e.skipped}
        labeled = [inst for inst in instances if inst.instance_id in pasted_ids]
        height, width = composed.shape[:2]
        imio.write_rgb(out_rgb, composed)
        out_label.write_text(emit_labels(labeled, (width, height)))
        out_record.write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True))
        return scene_id, "ok", width, height, ""
    except (VinegraftError, OSError, ValueError) as exc:
        return scene_id, "failed", 0, 0, f"{type(exc).__name__}: {exc}"


def run_compose(
    scenes_dir,
    buffer_dir,
    out_dir,
    master_seed: int = 0,
    config: ComposeConfig = ComposeConfig(),
    workers: int = 1,
    resume: bool = False,
    min_cutout_area: int = 64,
) -> ComposeSummary:
    """Compose every scene under ``scenes_dir`` against one cutout buffer.

    A failing scene is skipped and reported, never aborts the batch.  With
    ``resume`` set, scenes whose three outputs already exist are left
    untouched, and the final bytes match a single full run.
    """
    scenes = Path(scenes_dir)
    out = imio.ensure_dir(out_dir)
    stems = sorted(
        p.name[: -len(INST_SUFFIX)] for p in scenes.glob(f"*{INST_SUFFIX}")
    )
    if not stems:
        raise VinegraftError(f"no scenes found under {scenes}")
    _compose_worker_init(str(buffer_dir), min_cutout_area)

    args = [
        (str(scenes), str(out), sid, i, master_seed, config, resume)
        for i, sid in enumerate(stems)
    ]
    if workers <= 1 or len(args) <= 1:
        results = [_compose_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_compose_worker_init,
            initargs=(str(buffer_dir), min_cutout_area),
        ) as pool:
            results = list(pool.map(_compose_one, *zip(*args)))

    failed = [(sid, err) for sid, status, _, _, err in results if status == "failed"]
    entries = [
        {
            "scene_id": sid,
            "image": f"{sid}{RGB_SUFFIX}",
            "label": f"{sid}{LABEL_SUFFIX}",
            "record": f"{sid}{RECORD_SUFFIX}",
            "width": w,
            "height": h,
        }
        for sid, status, w, h, _ in sorted(results)
        if status != "failed"
    ]
    manifest_path = out / DATASET_MANIFEST
    manifest_path.write_text(
        json.dumps({"seed": master_seed, "images": entries}, indent=2, sort_keys=True)
    )
    return ComposeSummary(
        out_dir=str(out),
        n_scenes=len(stems),
        n_composed=len(entries),
        n_failed=len(failed),
        failed=failed,
        manifest_path=str(manifest_path),
    )


def export_cutouts(
    scenes_dir,
    buffer_dir,
    margin: int = 2,
    limit: Optional[int] = None,
) -> int:
    """Crop every visible scene instance into ``<id>.rgb.png`` +
    ``<id>.mask.png`` buffer pairs; returns the number written.

    Handy for bootstrapping a demo buffer from synthetic output when no
    real cutouts are at hand.
    """
    scenes = Path(scenes_dir)
    out = imio.ensure_dir(buffer_dir)
    written = 0
    for inst_path in sorted(scenes.glob(f"*{INST_SUFFIX}")):
        scene_id = inst_path.name[: -len(INST_SUFFIX)]
        rgb = imio.read_rgb(scenes / f"{scene_id}{RGB_SUFFIX}")
        imap = imio.read_instance_map(inst_path)
        for inst in parse_instance_map(imap):
            if limit is not None and written >= limit:
                return written
            box = inst.bbox
            x0 = max(0, int(box.x_min) - margin)
            y0 = max(0, int(box.y_min) - margin)
            x1 = min(imap.shape[1], int(box.x_max) + margin)
            y1 = min(imap.shape[0], int(box.y_max) + margin)
            cid = f"{scene_id}_i{inst.instance_id:03d}"
            imio.write_rgb(out / f"{cid}{RGB_SUFFIX}", rgb[y0:y1, x0:x1])
            imio.write_mask(out / f"{cid}.mask.png", inst.mask[y0:y1, x0:x1])
            written += 1
    return written


def _read_gt_boxes(path: Path, dims: tuple[int, int]):
    return [bbox_from_label(l, dims) for l in parse_label_lines(path.read_text())]


def _read_predictions(path: Path, dims: tuple[int, int]) -> list[Detection]:
    """Per-image prediction file: ``class conf cx cy w h`` lines."""
    preds = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(
                f"{path.name} line {lineno}: expected 'class conf cx cy w h'"
            )
        label = DetectionLabel(
            class_id=int(parts[0]),
            cx=float(parts[2]),
            cy=float(parts[3]),
            w=float(parts[4]),
            h=float(parts[5]),
        )
        preds.append(
            Detection(
                class_id=label.class_id,
                bbox=bbox_from_label(label, dims),
                confidence=float(parts[1]),
            )
        )
    return preds


def _image_dims_for(gt_dir: Path, stem: str) -> tuple[int, int]:
    image = gt_dir / f"{stem}{RGB_SUFFIX}"
    if image.exists():
        rgb = imio.read_rgb(image)
        return rgb.shape[1], rgb.shape[0]
    # IoU is invariant to the denormalization dims, so any reference works
    return _REFERENCE_DIMS


def run_eval(
    pred_dir,
    gt_dir,
    conf_thresh: float = DEFAULT_CONF_THRESH,
    iou_thresh: float = DEFAULT_IOU_THRESH,
    out_dir=None,
    interpolation: str = ALL_POINTS,
    master_seed: Optional[int] = None,
) -> EvalReport:
    """Score per-image prediction files against label files.

    Ground truth is every ``*.txt`` under ``gt_dir``; predictions pair by
    file stem (a missing prediction file means no detections for that
    image).  Writes ``report.json`` and ``report.txt`` when ``out_dir``
    is given.
    """
    gt_path = Path(gt_dir)
    pred_path = Path(pred_dir)
    stems = sorted(p.stem for p in gt_path.glob(f"*{LABEL_SUFFIX}"))
    if not stems:
        raise VinegraftError(f"no ground-truth label files under {gt_path}")
    gts_by_image = {}
    preds_by_image = {}
    for stem in stems:
        dims = _image_dims_for(gt_path, stem)
        gts_by_image[stem] = _read_gt_boxes(gt_path / f"{stem}{LABEL_SUFFIX}", dims)
        pred_file = pred_path / f"{stem}{LABEL_SUFFIX}"
        preds_by_image[stem] = (
            _read_predictions(pred_file, dims) if pred_file.exists() else []
        )
    report = evaluate(
        preds_by_image,
        gts_by_image,
        conf_thresh=conf_thresh,
        iou_thresh=iou_thresh,
        interpolation=interpolation,
    )
    if out_dir is not None:
        out = imio.ensure_dir(out_dir)
        payload = report.to_dict()
        if master_seed is not None:
            payload["seed"] = master_seed
        (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
        (out / "report.txt").write_text(report_table(report))
    return report
