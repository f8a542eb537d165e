"""Run configuration: plain ``key = value`` text files plus defaults.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Recognized keys: master_seed, buffer_dir, scenes_dir, out_dir, workers,
min_paste_area, feather_radius, paste_order, scale_on_rotated,
conf_thresh, iou_thresh.  Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .compositing import ComposeConfig
from .metrics import DEFAULT_CONF_THRESH, DEFAULT_IOU_THRESH

_BOOL_VALUES = {
    "true": True,
    "false": False,
    "yes": True,
    "no": False,
    "1": True,
    "0": False,
}


@dataclass
class RunConfig:
    master_seed: int = 0
    buffer_dir: Optional[str] = None
    scenes_dir: Optional[str] = None
    out_dir: Optional[str] = None
    workers: int = 1
    compose: ComposeConfig = field(default_factory=ComposeConfig)
    conf_thresh: float = DEFAULT_CONF_THRESH
    iou_thresh: float = DEFAULT_IOU_THRESH


def parse_config_text(text: str) -> dict[str, str]:
    """Raw key/value pairs from config text; duplicate keys keep the last."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        out[key] = value
    return out


def _to_bool(value: str, key: str) -> bool:
    try:
        return _BOOL_VALUES[value.lower()]
    except KeyError:
        raise ValueError(f"config key {key}: expected a boolean, got {value!r}") from None


def config_from_pairs(pairs: dict[str, str]) -> RunConfig:
    cfg = RunConfig()
    compose_kwargs = {
        "min_paste_area": cfg.compose.min_paste_area,
        "feather_radius": cfg.compose.feather_radius,
        "paste_order": cfg.compose.paste_order,
        "scale_on_rotated": cfg.compose.scale_on_rotated,
    }
    for key, value in pairs.items():
        if key == "master_seed":
            cfg.master_seed = int(value)
        elif key == "buffer_dir":
            cfg.buffer_dir = value
        elif key == "scenes_dir":
            cfg.scenes_dir = value
        elif key == "out_dir":
            cfg.out_dir = value
        elif key == "workers":
            cfg.workers = int(value)
        elif key == "min_paste_area":
            compose_kwargs["min_paste_area"] = int(value)
        elif key == "feather_radius":
            compose_kwargs["feather_radius"] = int(value)
        elif key == "paste_order":
            compose_kwargs["paste_order"] = value
        elif key == "scale_on_rotated":
            compose_kwargs["scale_on_rotated"] = _to_bool(value, key)
        elif key == "conf_thresh":
            cfg.conf_thresh = float(value)
        elif key == "iou_thresh":
            cfg.iou_thresh = float(value)
        else:
            raise ValueError(f"unknown config key: {key!r}")
    cfg.compose = ComposeConfig(**compose_kwargs)
    return cfg


def load_config(path) -> RunConfig:
    return config_from_pairs(parse_config_text(Path(path).read_text()))
