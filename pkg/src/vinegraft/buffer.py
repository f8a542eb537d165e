"""The pool of real instance cutouts sampled during composition.

Disk layout per cutout: ``<id>.rgb.png`` (8-bit RGB) next to
``<id>.mask.png`` (8-bit grayscale, pixel > 0 means foreground).
Ingestion emits a ``buffer.json`` manifest with a content digest so a
given directory always reproduces the same buffer.

Randomness contract: every draw in this package flows from one master seed
through numpy's PCG64 generator; batch runners derive one independent
stream per scene as ``master_seed XOR scene_index``.  The generator family
is pinned so that a (files, seed) pair reproduces a dataset byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyBufferError, ShapeMismatchError
from .imio import read_mask, read_rgb

RGB_SUFFIX = ".rgb.png"
MASK_SUFFIX = ".mask.png"
MANIFEST_NAME = "buffer.json"
DEFAULT_MIN_CUTOUT_AREA = 64


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream, the one generator family used package-wide."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master_seed: int, index: int) -> int:
    """Per-scene stream seed: master seed XOR scene index."""
    return (int(master_seed) ^ int(index)) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True, eq=False)
class InstanceCutout:
    """One real object patch: RGB pixels, foreground mask, provenance id."""

    id: str
    color: np.ndarray
    mask: np.ndarray
    source: str = ""

    def __post_init__(self):
        if self.color.shape[:2] != self.mask.shape:
            raise ShapeMismatchError(
                f"cutout {self.id!r}: color {self.color.shape[:2]} vs mask {self.mask.shape}"
            )

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass(eq=False)
class CutoutBuffer:
    """Ordered, immutable-after-ingest collection of cutouts."""

    items: list[InstanceCutout]
    manifest_digest: str
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def get(self, cutout_id: str) -> InstanceCutout:
        for c in self.items:
            if c.id == cutout_id:
                return c
        raise KeyError(cutout_id)

    def manifest(self) -> dict:
        return {
            "items": [
                {
                    "id": c.id,
                    "width": int(c.mask.shape[1]),
                    "height": int(c.mask.shape[0]),
                    "area_px": c.area,
                    "source": c.source,
                }
                for c in self.items
            ],
            "manifest_digest": self.manifest_digest,
        }


def _digest(items: list[InstanceCutout]) -> str:
    h = hashlib.sha256()
    for c in items:
        for part in (
            c.id.encode(),
            repr(c.color.shape).encode(),
            c.color.tobytes(),
            np.packbits(c.mask).tobytes(),
            c.source.encode(),
        ):
            h.update(len(part).to_bytes(8, "big"))
            h.update(part)
    return h.hexdigest()


def ingest_buffer(
    directory,
    min_cutout_area: int = DEFAULT_MIN_CUTOUT_AREA,
    write_manifest: bool = True,
) -> CutoutBuffer:
    """Load every ``<id>.rgb.png`` / ``<id>.mask.png`` pair under ``directory``.

    Pairs violating the cutout invariants are skipped with a recorded
    reason; valid cutouts are ordered lexicographically by id.  Unreadable
    files raise ``OSError``.  Raises ``EmptyBufferError`` when no valid
    pair remains.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise OSError(f"not a directory: {directory}")
    ids = sorted(p.name[: -len(RGB_SUFFIX)] for p in directory.glob(f"*{RGB_SUFFIX}"))
    items: list[InstanceCutout] = []
    skipped: list[tuple[str, str]] = []
    for cid in ids:
        rgb_path = directory / f"{cid}{RGB_SUFFIX}"
        mask_path = directory / f"{cid}{MASK_SUFFIX}"
        if not mask_path.exists():
            skipped.append((cid, "missing mask file"))
            continue
        color = read_rgb(rgb_path)
        mask = read_mask(mask_path)
        if color.shape[:2] != mask.shape:
            skipped.append(
                (
                    cid,
                    "ShapeMismatch: color "
                    f"{color.shape[1]}x{color.shape[0]} vs mask "
                    f"{mask.shape[1]}x{mask.shape[0]}",
                )
            )
            continue
        area = int(np.count_nonzero(mask))
        if area < min_cutout_area:
            skipped.append(
                (cid, f"foreground area {area} px below min_cutout_area {min_cutout_area}")
            )
            continue
        items.append(InstanceCutout(id=cid, color=color, mask=mask, source=rgb_path.name))
    if not items:
        raise EmptyBufferError(
            f"no valid cutouts in {directory} ({len(skipped)} pair(s) skipped)"
        )
    buf = CutoutBuffer(items=items, manifest_digest=_digest(items), skipped=skipped)
    if write_manifest:
        manifest_path = directory / MANIFEST_NAME
        manifest_path.write_text(json.dumps(buf.manifest(), indent=2, sort_keys=True))
    return buf


def sample_cutout(buffer: CutoutBuffer, rng: np.random.Generator) -> InstanceCutout:
    """Uniform draw with replacement."""
    if len(buffer.items) == 0:
        raise EmptyBufferError("cannot sample from an empty buffer")
    return buffer.items[int(rng.integers(len(buffer.items)))]
