"""FastAPI application exposing the pipeline as HTTP endpoints.

Run with ``uvicorn vinegraft.service.app:app``.  Domain and I/O errors map
to 400 responses whose detail starts with the error class name.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from ..compositing import ComposeConfig
from ..errors import VinegraftError
from ..pipeline import run_compose, run_eval, run_ingest, run_synth
from .models import (
    ComposeRequest,
    ComposeResponse,
    EvalRequest,
    EvalResponse,
    FailedScene,
    IngestRequest,
    IngestResponse,
    SkippedPair,
    SynthRequest,
    SynthResponse,
)

app = FastAPI(
    title="vinegraft",
    description="Cut-and-paste dataset composition and detection evaluation",
    version="0.1.0",
)


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=f"{type(exc).__name__}: {exc}")


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/ingest", response_model=IngestResponse)
def ingest(req: IngestRequest) -> IngestResponse:
    try:
        summary = run_ingest(req.buffer_dir, min_cutout_area=req.min_cutout_area)
    except (VinegraftError, OSError, ValueError) as exc:
        raise _bad_request(exc)
    return IngestResponse(
        count=summary.count,
        manifest_digest=summary.manifest_digest,
        manifest_path=summary.manifest_path,
        skipped=[SkippedPair(id=i, reason=r) for i, r in summary.skipped],
    )


@app.post("/synth", response_model=SynthResponse)
def synth(req: SynthRequest) -> SynthResponse:
    try:
        summary = run_synth(
            req.out_dir,
            n_scenes=req.n_scenes,
            master_seed=req.seed,
            width=req.width,
            height=req.height,
            n_instances=req.n_instances,
            level_counts=req.level_counts,
            workers=req.workers,
        )
    except (VinegraftError, OSError, ValueError) as exc:
        raise _bad_request(exc)
    return SynthResponse(
        out_dir=summary.out_dir,
        scene_ids=summary.scene_ids,
        level_counts=summary.level_counts,
    )


@app.post("/compose", response_model=ComposeResponse)
def compose(req: ComposeRequest) -> ComposeResponse:
    try:
        config = ComposeConfig(
            min_paste_area=req.min_paste_area,
            feather_radius=req.feather_radius,
            paste_order=req.paste_order,
            scale_on_rotated=req.scale_on_rotated,
        )
        summary = run_compose(
            req.scenes_dir,
            req.buffer_dir,
            req.out_dir,
            master_seed=req.seed,
            config=config,
            workers=req.workers,
            resume=req.resume,
        )
    except (VinegraftError, OSError, ValueError) as exc:
        raise _bad_request(exc)
    return ComposeResponse(
        out_dir=summary.out_dir,
        n_scenes=summary.n_scenes,
        n_composed=summary.n_composed,
        n_failed=summary.n_failed,
        failed=[FailedScene(scene_id=s, error=e) for s, e in summary.failed],
        manifest_path=summary.manifest_path,
    )


@app.post("/eval", response_model=EvalResponse)
def eval_metrics(req: EvalRequest) -> EvalResponse:
    try:
        report = run_eval(
            req.pred_dir,
            req.gt_dir,
            conf_thresh=req.conf_thresh,
            iou_thresh=req.iou_thresh,
            out_dir=req.out_dir,
            interpolation=req.interpolation,
            master_seed=req.seed,
        )
    except (VinegraftError, OSError, ValueError) as exc:
        raise _bad_request(exc)
    report_path = None
    if req.out_dir is not None:
        report_path = str(Path(req.out_dir) / "report.json")
    return EvalResponse(
        precision=report.precision,
        recall=report.recall,
        f1=report.f1,
        map50=report.map50,
        map50_95=report.map50_95,
        tp=report.tp,
        fp=report.fp,
        fn=report.fn,
        conf_thresh=report.conf_thresh,
        iou_thresh=report.iou_thresh,
        report_path=report_path,
    )
