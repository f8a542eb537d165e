"""Command-line client for the pipeline.

Subcommands: ingest | synth | compose | eval.  Every run goes through the
service request/response schemas: by default the in-process handlers are
invoked directly, while ``--server URL`` sends the same request to a
running instance over HTTP.  Values resolve as flag > config file >
built-in default.

Exit codes: 0 success, 1 validation or runtime error, 2 completed
partially (some scenes failed and were skipped).
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, TypeVar

import httpx
from fastapi import HTTPException
from pydantic import BaseModel

from .config import RunConfig, load_config
from .service.app import compose as compose_endpoint
from .service.app import eval_metrics as eval_endpoint
from .service.app import ingest as ingest_endpoint
from .service.app import synth as synth_endpoint
from .service.models import (
    ComposeRequest,
    ComposeResponse,
    EvalRequest,
    EvalResponse,
    IngestRequest,
    IngestResponse,
    SynthRequest,
    SynthResponse,
)

R = TypeVar("R", bound=BaseModel)


class CommandError(Exception):
    pass


def _call(
    server: Optional[str],
    handler,
    path: str,
    request: BaseModel,
    response_model: type[R],
) -> R:
    if server:
        resp = httpx.post(
            server.rstrip("/") + path, json=request.model_dump(), timeout=None
        )
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise CommandError(f"{detail}")
        return response_model.model_validate(resp.json())
    try:
        return handler(request)
    except HTTPException as exc:
        raise CommandError(str(exc.detail))


def _load_run_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    return load_config(path)


def _pick(flag_value, config_value, default):
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return config_value
    return default


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--server", help="base URL of a running service instance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vinegraft",
        description="Cut-and-paste dataset composition and detection evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a cutout directory and write buffer.json")
    p.add_argument("buffer_dir", nargs="?", help="directory of <id>.rgb.png/<id>.mask.png pairs")
    p.add_argument("--min-cutout-area", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("synth", help="render synthetic scenes across the exposure sweep")
    p.add_argument("--out", default=None, help="output scene directory")
    p.add_argument("-n", "--n-scenes", type=int, default=4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--instances", type=int, default=6, help="instances per scene")
    p.add_argument("--workers", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("compose", help="paste cutouts onto every scene instance")
    p.add_argument("--scenes", default=None, help="scene directory from synth")
    p.add_argument("--buffer", default=None, help="cutout buffer directory")
    p.add_argument("--out", default=None, help="output dataset directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--min-paste-area", type=int, default=None)
    p.add_argument("--feather", type=int, default=None, help="feather radius in px")
    p.add_argument("--paste-order", choices=("area_desc", "id_asc"), default=None)
    p.add_argument("--resume", action="store_true", help="complete only missing scenes")
    _add_common(p)

    p = sub.add_parser("eval", help="score prediction files against label files")
    p.add_argument("--preds", default=None, help="directory of per-image prediction files")
    p.add_argument("--gt", default=None, help="directory of label files")
    p.add_argument("--conf-thresh", type=float, default=None)
    p.add_argument("--iou-thresh", type=float, default=None)
    p.add_argument("--out", default=None, help="directory for report.json / report.txt")
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    return parser


def _require(value, what: str):
    if value is None:
        raise CommandError(f"missing required {what}")
    return value


def _cmd_ingest(args, cfg: RunConfig) -> int:
    buffer_dir = _require(_pick(args.buffer_dir, cfg.buffer_dir, None), "buffer directory")
    req = IngestRequest(
        buffer_dir=str(buffer_dir),
        min_cutout_area=_pick(args.min_cutout_area, None, 64),
    )
    resp = _call(args.server, ingest_endpoint, "/ingest", req, IngestResponse)
    print(f"ingested {resp.count} cutout(s); manifest {resp.manifest_path}")
    print(f"digest {resp.manifest_digest}")
    for item in resp.skipped:
        print(f"skipped {item.id}: {item.reason}")
    return 0


def _cmd_synth(args, cfg: RunConfig) -> int:
    out = _require(_pick(args.out, cfg.out_dir, None), "--out directory")
    req = SynthRequest(
        out_dir=str(out),
        n_scenes=args.n_scenes,
        seed=_pick(args.seed, cfg.master_seed, 0),
        width=args.width,
        height=args.height,
        n_instances=args.instances,
        workers=_pick(args.workers, cfg.workers, 1),
    )
    resp = _call(args.server, synth_endpoint, "/synth", req, SynthResponse)
    counts = ", ".join(f"{k}={v}" for k, v in resp.level_counts.items())
    print(f"wrote {len(resp.scene_ids)} scene(s) to {resp.out_dir} ({counts})")
    return 0


def _cmd_compose(args, cfg: RunConfig) -> int:
    req = ComposeRequest(
        scenes_dir=str(_require(_pick(args.scenes, cfg.scenes_dir, None), "--scenes directory")),
        buffer_dir=str(_require(_pick(args.buffer, cfg.buffer_dir, None), "--buffer directory")),
        out_dir=str(_require(_pick(args.out, cfg.out_dir, None), "--out directory")),
        seed=_pick(args.seed, cfg.master_seed, 0),
        min_paste_area=_pick(args.min_paste_area, cfg.compose.min_paste_area, 64),
        feather_radius=_pick(args.feather, cfg.compose.feather_radius, 0),
        paste_order=_pick(args.paste_order, cfg.compose.paste_order, "area_desc"),
        scale_on_rotated=cfg.compose.scale_on_rotated,
        workers=_pick(args.workers, cfg.workers, 1),
        resume=args.resume,
    )
    resp = _call(args.server, compose_endpoint, "/compose", req, ComposeResponse)
    print(
        f"composed {resp.n_composed}/{resp.n_scenes} scene(s) into {resp.out_dir}; "
        f"manifest {resp.manifest_path}"
    )
    for item in resp.failed:
        print(f"failed {item.scene_id}: {item.error}", file=sys.stderr)
    return 2 if resp.n_failed else 0


def _cmd_eval(args, cfg: RunConfig) -> int:
    req = EvalRequest(
        pred_dir=str(_require(args.preds, "--preds directory")),
        gt_dir=str(_require(args.gt, "--gt directory")),
        conf_thresh=_pick(args.conf_thresh, cfg.conf_thresh, 0.25),
        iou_thresh=_pick(args.iou_thresh, cfg.iou_thresh, 0.3),
        out_dir=args.out,
        seed=_pick(args.seed, cfg.master_seed, None),
    )
    resp = _call(args.server, eval_endpoint, "/eval", req, EvalResponse)
    print(
        "Precision  Recall  F1     mAP50  mAP50-95\n"
        f"{resp.precision:<9.3f}  {resp.recall:<6.3f}  {resp.f1:<5.3f}  "
        f"{resp.map50:<5.3f}  {resp.map50_95:.3f}"
    )
    if resp.report_path:
        print(f"report written to {resp.report_path}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "synth": _cmd_synth,
    "compose": _cmd_compose,
    "eval": _cmd_eval,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_run_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
