"""Detection label emission and instance ground-truth parsing.

Label text format: one line per instance, ``class cx cy w h``, all four
box fields normalized to the image dimensions and printed with six
decimals.  Box centers come from the bbox center (not the mask centroid),
matching common detection tooling.  Instance maps come either id-indexed
(single channel, pixel value = id) or color-coded (unique non-black RGB
per instance).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .compositing import CompositeRecord, SceneInstance
from .errors import EncodingError
from .geometry import BBox

OBJECT_CLASS_ID = 0

ID_INDEXED = "id-indexed"
COLOR_CODED = "color-coded"

NORMALIZED_TEXT = "normalized-text"
JSON_MANIFEST = "json-manifest"


@dataclass(frozen=True)
class DetectionLabel:
    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"label center out of range: ({self.cx}, {self.cy})")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"label size out of range: ({self.w}, {self.h})")


def label_from_bbox(
    bbox: BBox, image_size: tuple[int, int], class_id: int = OBJECT_CLASS_ID
) -> DetectionLabel:
    w, h = image_size
    return DetectionLabel(
        class_id=class_id,
        cx=(bbox.x_min + bbox.width / 2.0) / w,
        cy=(bbox.y_min + bbox.height / 2.0) / h,
        w=bbox.width / w,
        h=bbox.height / h,
    )


def bbox_from_label(label: DetectionLabel, image_size: tuple[int, int]) -> BBox:
    """Denormalize back to pixel coordinates (dims clamped to >= 1 px)."""
    w, h = image_size
    bw = max(1.0, label.w * w)
    bh = max(1.0, label.h * h)
    return BBox(label.cx * w - bw / 2.0, label.cy * h - bh / 2.0, bw, bh)


def parse_instance_map(imap: np.ndarray, encoding: str = ID_INDEXED) -> list[SceneInstance]:
    """One SceneInstance per distinct non-background value or color.

    Disconnected pixel groups sharing one id stay a single instance: an
    object split by an occluder is still one object.
    """
    if encoding == ID_INDEXED:
        arr = np.asarray(imap)
        if arr.ndim != 2:
            raise EncodingError(
                f"id-indexed map must be single-channel, got shape {arr.shape}"
            )
        ids = np.unique(arr)
        return [SceneInstance.from_mask(int(i), arr == i) for i in ids if i != 0]
    if encoding == COLOR_CODED:
        arr = np.asarray(imap)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise EncodingError(
                f"color-coded map must be (H, W, 3), got shape {arr.shape}"
            )
        flat = arr.reshape(-1, 3)
        colors = sorted(
            tuple(int(v) for v in c)
            for c in np.unique(flat, axis=0)
            if any(int(v) for v in c)
        )
        out = []
        for idx, color in enumerate(colors, start=1):
            mask = np.all(arr == np.array(color, dtype=arr.dtype), axis=2)
            out.append(SceneInstance.from_mask(idx, mask))
        return out
    raise EncodingError(f"unknown instance-map encoding: {encoding!r}")


def _id_color(instance_id: int) -> tuple[int, int, int]:
    i = instance_id - 1
    return (i % 254 + 1, (i // 254) % 255, (i // (254 * 255)) % 255)


def color_code_instance_map(imap: np.ndarray) -> np.ndarray:
    """Export convention: a unique non-black RGB per instance id."""
    arr = np.asarray(imap)
    out = np.zeros(arr.shape + (3,), dtype=np.uint8)
    for i in np.unique(arr):
        if i == 0:
            continue
        out[arr == i] = _id_color(int(i))
    return out


def emit_labels(
    instances: list[SceneInstance],
    image_size: tuple[int, int],
    fmt: str = NORMALIZED_TEXT,
    record: Optional[CompositeRecord] = None,
    class_id: int = OBJECT_CLASS_ID,
) -> str:
    """Serialize instance bboxes as label-file content.

    ``normalized-text`` emits ``class cx cy w h`` lines; ``json-manifest``
    adds instance id, pixel area, and (when a composite record is given)
    the provenance cutout id of pasted instances.
    """
    labels = [(inst, label_from_bbox(inst.bbox, image_size, class_id)) for inst in instances]
    if fmt == NORMALIZED_TEXT:
        return "".join(
            f"{l.class_id} {l.cx:.6f} {l.cy:.6f} {l.w:.6f} {l.h:.6f}\n"
            for _, l in labels
        )
    if fmt == JSON_MANIFEST:
        cutout_by_instance = {}
        if record is not None:
            cutout_by_instance = {
                e.instance_id: e.cutout_id for e in record.entries if not e.skipped
            }
        entries = []
        for inst, l in labels:
            entry = {
                "class_id": l.class_id,
                "cx": round(l.cx, 6),
                "cy": round(l.cy, 6),
                "w": round(l.w, 6),
                "h": round(l.h, 6),
                "instance_id": inst.instance_id,
                "area_px": inst.area,
            }
            if inst.instance_id in cutout_by_instance:
                entry["cutout_id"] = cutout_by_instance[inst.instance_id]
            entries.append(entry)
        return json.dumps(
            {
                "image_width": image_size[0],
                "image_height": image_size[1],
                "labels": entries,
            },
            indent=2,
            sort_keys=True,
        )
    raise EncodingError(f"unknown label format: {fmt!r}")


def parse_label_lines(text: str) -> list[DetectionLabel]:
    """Parse ``class cx cy w h`` lines back into labels."""
    labels = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"label line {lineno}: expected 5 fields, got {len(parts)}")
        labels.append(
            DetectionLabel(
                class_id=int(parts[0]),
                cx=float(parts[1]),
                cy=float(parts[2]),
                w=float(parts[3]),
                h=float(parts[4]),
            )
        )
    return labels
