"""Shared fixtures: random masks, cutouts, and on-disk buffer directories."""

from __future__ import annotations

import numpy as np
import pytest

from vinegraft import imio
from vinegraft.buffer import MASK_SUFFIX, RGB_SUFFIX, InstanceCutout, make_rng


def random_blob_mask(rng: np.random.Generator, h: int = 32, w: int = 32) -> np.ndarray:
    """Random filled ellipse plus salt noise; always >= 2 foreground px."""
    mask = np.zeros((h, w), dtype=bool)
    cy, cx = rng.uniform(h * 0.3, h * 0.7), rng.uniform(w * 0.3, w * 0.7)
    a = rng.uniform(w * 0.12, w * 0.35)
    b = rng.uniform(h * 0.08, h * 0.3)
    phi = rng.uniform(-np.pi, np.pi)
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    u = (xs - cx) * np.cos(phi) + (ys - cy) * np.sin(phi)
    v = -(xs - cx) * np.sin(phi) + (ys - cy) * np.cos(phi)
    mask |= (u / a) ** 2 + (v / b) ** 2 <= 1.0
    mask |= rng.random((h, w)) < 0.02
    if mask.sum() < 2:
        mask[h // 2, w // 2 : w // 2 + 2] = True
    return mask


def make_cutout(
    rng: np.random.Generator,
    h: int = 40,
    w: int = 48,
    cutout_id: str = "c0",
) -> InstanceCutout:
    color = rng.integers(0, 256, size=(h, w, 3), dtype=np.int64).astype(np.uint8)
    mask = random_blob_mask(rng, h, w)
    return InstanceCutout(id=cutout_id, color=color, mask=mask)


def write_pair(directory, cutout_id: str, color: np.ndarray, mask: np.ndarray) -> None:
    imio.write_rgb(directory / f"{cutout_id}{RGB_SUFFIX}", color)
    imio.write_mask(directory / f"{cutout_id}{MASK_SUFFIX}", mask)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240601)


@pytest.fixture
def buffer_dir(tmp_path, rng):
    """Directory with three valid cutout pairs (ids b0 < b1 < b2)."""
    d = tmp_path / "buffer"
    d.mkdir()
    for i in range(3):
        cut = make_cutout(rng, cutout_id=f"b{i}")
        write_pair(d, cut.id, cut.color, cut.mask)
    return d
