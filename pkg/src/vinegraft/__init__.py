"""Geometry-consistent cut-and-paste dataset composition.

Real object cutouts are pasted onto synthetic scene instances after
principal-axis alignment and covering-scale fitting, clipped to the
synthetic masks so occlusions survive, then blended.  The package also
ships a procedural scene generator, detection-label tooling, and a
single-class detection evaluator (precision/recall/F1, mAP50, mAP50-95).
"""

from .buffer import (
    CutoutBuffer,
    InstanceCutout,
    derive_seed,
    ingest_buffer,
    make_rng,
    sample_cutout,
)
from .compositing import (
    ComposeConfig,
    CompositeRecord,
    PasteEntry,
    PlacedCutout,
    SceneInstance,
    blend,
    clip_to_target,
    compose_scene,
    plan_alignment,
    transform_cutout,
)
from .errors import (
    DegenerateMaskError,
    EmptyBufferError,
    EmptyMaskError,
    EncodingError,
    OutOfFrameError,
    SceneSpecError,
    ShapeMismatchError,
    VinegraftError,
)
from .geometry import (
    AlignmentPlan,
    BBox,
    PrincipalAxes,
    compute_pca,
    mask_bbox,
    rotation_angle,
    scale_factor,
    wrap_axis_angle,
)
from .labeling import (
    DetectionLabel,
    bbox_from_label,
    emit_labels,
    label_from_bbox,
    parse_instance_map,
    parse_label_lines,
)
from .metrics import (
    Detection,
    EvalReport,
    average_precision,
    evaluate,
    f1_score,
    iou,
    map_suite,
    match_detections,
    pr_f1_at,
)
from .pipeline import export_cutouts, run_compose, run_eval, run_ingest, run_synth
from .scenes import LIGHTING_LEVELS, SynthSceneSpec, apportion_counts, synth_scene

__version__ = "0.1.0"

__all__ = [
    "AlignmentPlan",
    "BBox",
    "ComposeConfig",
    "CompositeRecord",
    "CutoutBuffer",
    "DegenerateMaskError",
    "Detection",
    "DetectionLabel",
    "EmptyBufferError",
    "EmptyMaskError",
    "EncodingError",
    "EvalReport",
    "InstanceCutout",
    "LIGHTING_LEVELS",
    "OutOfFrameError",
    "PasteEntry",
    "PlacedCutout",
    "PrincipalAxes",
    "SceneInstance",
    "SceneSpecError",
    "ShapeMismatchError",
    "SynthSceneSpec",
    "VinegraftError",
    "apportion_counts",
    "average_precision",
    "bbox_from_label",
    "blend",
    "clip_to_target",
    "compose_scene",
    "compute_pca",
    "derive_seed",
    "emit_labels",
    "evaluate",
    "export_cutouts",
    "f1_score",
    "ingest_buffer",
    "iou",
    "label_from_bbox",
    "make_rng",
    "map_suite",
    "mask_bbox",
    "match_detections",
    "parse_instance_map",
    "parse_label_lines",
    "plan_alignment",
    "pr_f1_at",
    "rotation_angle",
    "run_compose",
    "run_eval",
    "run_ingest",
    "run_synth",
    "sample_cutout",
    "scale_factor",
    "synth_scene",
    "transform_cutout",
    "wrap_axis_angle",
]
