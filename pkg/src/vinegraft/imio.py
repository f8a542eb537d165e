"""PNG readers and writers for the on-disk formats.

In memory, color images are RGB uint8 arrays of shape (H, W, 3), masks are
boolean (H, W), and instance maps are uint16 (H, W) with 0 = background.
OpenCV stores channels as BGR, so channel conversion happens here and
nowhere else.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np


def read_rgb(path) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if img is None:
        raise OSError(f"cannot read image: {path}")
    return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)


def write_rgb(path, rgb: np.ndarray) -> None:
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB array, got shape {rgb.shape}")
    if not cv2.imwrite(str(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR)):
        raise OSError(f"cannot write image: {path}")


def read_mask(path) -> np.ndarray:
    """Grayscale PNG where any value > 0 is foreground."""
    gray = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if gray is None:
        raise OSError(f"cannot read mask: {path}")
    return gray > 0


def write_mask(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"expected (H, W) mask, got shape {mask.shape}")
    if not cv2.imwrite(str(path), mask.astype(bool).astype(np.uint8) * 255):
        raise OSError(f"cannot write mask: {path}")


def read_instance_map(path) -> np.ndarray:
    """16-bit grayscale PNG, pixel value = instance id, 0 = background."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"cannot read instance map: {path}")
    if raw.ndim != 2:
        raise OSError(f"instance map must be single-channel: {path}")
    return raw.astype(np.uint16)


def write_instance_map(path, imap: np.ndarray) -> None:
    imap = np.asarray(imap)
    if imap.ndim != 2:
        raise ValueError(f"expected (H, W) instance map, got shape {imap.shape}")
    if not cv2.imwrite(str(path), imap.astype(np.uint16)):
        raise OSError(f"cannot write instance map: {path}")


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
