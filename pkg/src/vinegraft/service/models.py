"""Request and response schemas for the HTTP service.

Endpoints operate on server-local paths: requests name directories, the
service reads and writes them, and responses summarize the results.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class SkippedPair(BaseModel):
    id: str
    reason: str


class IngestRequest(BaseModel):
    buffer_dir: str
    min_cutout_area: int = Field(default=64, ge=1)


class IngestResponse(BaseModel):
    count: int
    manifest_digest: str
    manifest_path: str
    skipped: list[SkippedPair] = []


class SynthRequest(BaseModel):
    out_dir: str
    n_scenes: int = Field(default=4, ge=0)
    seed: int = 0
    width: int = Field(default=640, ge=16)
    height: int = Field(default=480, ge=16)
    n_instances: int = Field(default=6, ge=0)
    workers: int = Field(default=1, ge=1)
    level_counts: Optional[dict[str, int]] = None


class SynthResponse(BaseModel):
    out_dir: str
    scene_ids: list[str]
    level_counts: dict[str, int]


class ComposeRequest(BaseModel):
    scenes_dir: str
    buffer_dir: str
    out_dir: str
    seed: int = 0
    min_paste_area: int = Field(default=64, ge=1)
    feather_radius: int = Field(default=0, ge=0)
    paste_order: str = "area_desc"
    scale_on_rotated: bool = True
    workers: int = Field(default=1, ge=1)
    resume: bool = False


class FailedScene(BaseModel):
    scene_id: str
    error: str


class ComposeResponse(BaseModel):
    out_dir: str
    n_scenes: int
    n_composed: int
    n_failed: int
    failed: list[FailedScene] = []
    manifest_path: str


class EvalRequest(BaseModel):
    pred_dir: str
    gt_dir: str
    conf_thresh: float = Field(default=0.25, ge=0.0, le=1.0)
    iou_thresh: float = Field(default=0.3, ge=0.0, le=1.0)
    out_dir: Optional[str] = None
    interpolation: str = "all-points"
    seed: Optional[int] = None


class EvalResponse(BaseModel):
    precision: float
    recall: float
    f1: float
    map50: float
    map50_95: float
    tp: int
    fp: int
    fn: int
    conf_thresh: float
    iou_thresh: float
    report_path: Optional[str] = None
