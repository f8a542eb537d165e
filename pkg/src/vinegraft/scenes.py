"""Procedural synthetic scenes with exact instance ground truth.

Each instance is a cluster of overlapping filled ellipses elongated along
a sampled orientation, drawn over a textured background.  Later instances
occlude earlier ones in the instance map, and the emitted masks are taken
from the final map, so occlusion is baked into the ground truth.  A
four-level exposure sweep (gain/gamma per level) spans under- to
over-exposed, the top level clipping like a blown-out sensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .buffer import make_rng
from .compositing import SceneInstance
from .errors import SceneSpecError

# gain/gamma per exposure level; backlight intentionally clips highlights
LIGHTING_LEVELS: dict[str, tuple[float, float]] = {
    "low": (0.5, 1.2),
    "medium": (1.0, 1.0),
    "high": (1.5, 0.9),
    "backlight": (2.2, 0.7),
}

# default proportions of the four-level exposure mix
LEVEL_WEIGHTS = (209, 707, 559, 416)

_BG_TOP = np.array([74, 96, 58], dtype=np.float64)
_BG_BOTTOM = np.array([44, 58, 38], dtype=np.float64)
_FRUIT_BASE = np.array([104, 64, 118], dtype=np.float64)


@dataclass(frozen=True)
class SynthSceneSpec:
    width: int = 640
    height: int = 480
    n_instances: int = 6
    size_range: tuple[int, int] = (60, 140)
    orientation_range: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    lighting_level: str = "medium"
    seed: int = 0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise SceneSpecError(f"frame too small: {self.width}x{self.height}")
        if self.n_instances < 0:
            raise SceneSpecError(f"n_instances must be >= 0, got {self.n_instances}")
        if self.n_instances > 0xFFFF:
            raise SceneSpecError("n_instances exceeds the 16-bit instance-map range")
        lo, hi = self.size_range
        if not 0 < lo <= hi:
            raise SceneSpecError(f"invalid size_range: {self.size_range}")
        if hi > min(self.width, self.height):
            raise SceneSpecError(
                f"size_range {self.size_range} does not fit a "
                f"{self.width}x{self.height} frame"
            )
        if self.lighting_level not in LIGHTING_LEVELS:
            raise SceneSpecError(
                f"lighting_level must be one of {sorted(LIGHTING_LEVELS)}, "
                f"got {self.lighting_level!r}"
            )
        a, b = self.orientation_range
        if a > b:
            raise SceneSpecError(f"invalid orientation_range: {self.orientation_range}")


def apply_lighting(rgb: np.ndarray, level: str) -> np.ndarray:
    """Global gain/gamma exposure adjustment, clipped to 8 bits."""
    gain, gamma = LIGHTING_LEVELS[level]
    v = rgb.astype(np.float64) / 255.0
    out = gain * np.power(v, gamma)
    return (np.clip(out, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def apportion_counts(total: int, weights=LEVEL_WEIGHTS) -> list[int]:
    """Largest-remainder split of ``total`` proportional to ``weights``.

    When total allows, every bucket gets at least one (rebalanced from the
    largest bucket), so small batches still sweep all levels.
    """
    if total < 0:
        raise ValueError("total must be >= 0")
    wsum = float(sum(weights))
    quotas = [total * w / wsum for w in weights]
    counts = [int(math.floor(q)) for q in quotas]
    order = sorted(
        range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    if total >= len(weights):
        for i, c in enumerate(counts):
            if c == 0:
                donor = max(range(len(counts)), key=lambda j: counts[j])
                counts[donor] -= 1
                counts[i] += 1
    return counts


def _local_window(cx: float, cy: float, reach: float, w: int, h: int):
    x0 = max(0, int(math.floor(cx - reach)))
    x1 = min(w, int(math.ceil(cx + reach)) + 1)
    y0 = max(0, int(math.floor(cy - reach)))
    y1 = min(h, int(math.ceil(cy + reach)) + 1)
    return x0, x1, y0, y1


def _cluster_mask(
    rng: np.random.Generator,
    w: int,
    h: int,
    cx: float,
    cy: float,
    a: float,
    b: float,
    phi: float,
) -> np.ndarray:
    """Elongated ellipse plus a few lobes along its major axis."""
    cos_p, sin_p = math.cos(phi), math.sin(phi)
    reach = a + b + 2
    x0, x1, y0, y1 = _local_window(cx, cy, reach, w, h)
    ys, xs = np.mgrid[y0:y1, x0:x1].astype(np.float64)
    u = (xs - cx) * cos_p + (ys - cy) * sin_p
    v = -(xs - cx) * sin_p + (ys - cy) * cos_p
    local = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    n_lobes = int(rng.integers(4, 8))
    for t in np.linspace(-0.85, 0.85, n_lobes):
        lu = t * a + rng.uniform(-0.2, 0.2) * b
        lv = rng.uniform(-0.35, 0.35) * b
        r = b * rng.uniform(0.75, 1.15)
        lx = cx + lu * cos_p - lv * sin_p
        ly = cy + lu * sin_p + lv * cos_p
        local |= (xs - lx) ** 2 + (ys - ly) ** 2 <= r * r
    mask = np.zeros((h, w), dtype=bool)
    mask[y0:y1, x0:x1] = local
    return mask


def _background(rng: np.random.Generator, w: int, h: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, h)[:, None, None]
    base = _BG_TOP * (1.0 - t) + _BG_BOTTOM * t
    coarse = rng.normal(0.0, 11.0, size=(h // 16 + 1, w // 16 + 1))
    lowfreq = cv2.resize(coarse, (w, h), interpolation=cv2.INTER_LINEAR)
    grain = rng.normal(0.0, 6.0, size=(h, w))
    img = base + (lowfreq + grain)[..., None]
    return np.clip(img, 0, 255).astype(np.uint8)


def synth_scene(
    spec: SynthSceneSpec,
) -> tuple[np.ndarray, list[SceneInstance], np.ndarray]:
    """Render one scene: RGB image, visible instances, and the id map.

    Deterministic for a given spec (the seed included).  Fully occluded
    instances are dropped from both the map and the returned list, so the
    union of returned masks equals the non-background pixels of the map.
    """
    rng = make_rng(spec.seed)
    w, h = spec.width, spec.height
    rgb = _background(rng, w, h).astype(np.float64)
    imap = np.zeros((h, w), dtype=np.uint16)
    draws = []
    for idx in range(1, spec.n_instances + 1):
        size = float(rng.uniform(*spec.size_range))
        phi = float(rng.uniform(*spec.orientation_range))
        elong = float(rng.uniform(2.4, 3.4))
        a = size / 2.0
        b = a / elong
        margin = a + 3.0
        cx = float(rng.uniform(margin, w - margin)) if w > 2 * margin else w / 2.0
        cy = float(rng.uniform(margin, h - margin)) if h > 2 * margin else h / 2.0
        mask = _cluster_mask(rng, w, h, cx, cy, a, b, phi)
        imap[mask] = idx
        tint = _FRUIT_BASE * rng.uniform(0.82, 1.18, size=3)
        draws.append((idx, cx, cy, a, tint))

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    for idx, cx, cy, a, tint in draws:
        sel = imap == idx
        if not sel.any():
            continue
        d = np.sqrt((xs[sel] - cx) ** 2 + (ys[sel] - cy) ** 2) / a
        shade = np.clip(1.18 - 0.5 * d, 0.55, 1.25)
        rgb[sel] = shade[:, None] * tint[None, :]

    rgb = apply_lighting(np.clip(rgb, 0, 255).astype(np.uint8), spec.lighting_level)
    instances = []
    for idx in range(1, spec.n_instances + 1):
        mask = imap == idx
        if mask.any():
            instances.append(SceneInstance.from_mask(idx, mask))
    return rgb, instances, imap
