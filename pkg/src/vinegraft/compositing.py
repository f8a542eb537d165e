"""Per-instance paste pipeline and whole-scene orchestration.

For each synthetic instance the steps are: plan the alignment (minimal
axis rotation + covering scale), warp the sampled cutout in a single
affine pass, clip the warped mask to the synthetic instance mask so
pre-existing occlusions survive, and blend the pixels in.  Failures skip
the instance and are recorded, never abort the scene.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional

import cv2
import numpy as np
from scipy import ndimage

from .buffer import CutoutBuffer, InstanceCutout, sample_cutout
from .errors import (
    EmptyBufferError,
    EmptyMaskError,
    OutOfFrameError,
    ShapeMismatchError,
    VinegraftError,
)
from .geometry import (
    AlignmentPlan,
    BBox,
    PrincipalAxes,
    as_mask,
    compute_pca,
    foreground_points,
    mask_bbox,
    rotated_bbox_dims,
    rotation_angle,
    scale_factor,
)

PASTE_ORDERS = ("area_desc", "id_asc")


@dataclass(eq=False)
class SceneInstance:
    """One synthetic object instance, in scene coordinates."""

    instance_id: int
    mask: np.ndarray
    bbox: BBox

    @classmethod
    def from_mask(cls, instance_id: int, mask: np.ndarray) -> "SceneInstance":
        m = as_mask(mask)
        return cls(instance_id=int(instance_id), mask=m, bbox=mask_bbox(m))

    @cached_property
    def axes(self) -> PrincipalAxes:
        return compute_pca(self.mask)

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass(eq=False)
class PlacedCutout:
    """A transformed cutout positioned in scene coordinates.

    The raster window covers the transformed footprint clipped to the
    frame; ``(x0, y0)`` is the window origin in scene coordinates.
    ``full_bbox`` is the transformed mask's bounding box before any frame
    clipping (it may extend outside the frame), which is what the
    covering-scale guarantee is about.
    """

    cutout_id: str
    color: np.ndarray
    mask: np.ndarray
    x0: int
    y0: int
    full_bbox: tuple[int, int, int, int] = (0, 0, 1, 1)

    def scene_mask(self, scene_shape: tuple[int, int]) -> np.ndarray:
        """Expand the window mask onto a full-scene canvas (H, W)."""
        out = np.zeros(scene_shape, dtype=bool)
        h, w = self.mask.shape
        out[self.y0 : self.y0 + h, self.x0 : self.x0 + w] = self.mask
        return out


@dataclass
class PasteEntry:
    """Outcome of one instance in a composed scene, pasted or skipped."""

    instance_id: int
    skipped: bool
    reason: Optional[str] = None
    cutout_id: Optional[str] = None
    theta_rot: Optional[float] = None
    scale: Optional[float] = None
    target_centroid: Optional[tuple[float, float]] = None
    clipped_area_px: int = 0
    placed_bbox: Optional[tuple[int, int, int, int]] = None


@dataclass
class CompositeRecord:
    """Reproducibility ledger for one composed scene."""

    scene_id: str
    entries: list[PasteEntry] = field(default_factory=list)
    seed: Optional[int] = None

    @property
    def n_pasted(self) -> int:
        return sum(1 for e in self.entries if not e.skipped)

    @property
    def n_skipped(self) -> int:
        return sum(1 for e in self.entries if e.skipped)

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "seed": self.seed,
            "entries": [asdict(e) for e in self.entries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CompositeRecord":
        entries = []
        for raw in data.get("entries", []):
            e = dict(raw)
            for key in ("target_centroid", "placed_bbox"):
                if e.get(key) is not None:
                    e[key] = tuple(e[key])
            entries.append(PasteEntry(**e))
        return cls(scene_id=data["scene_id"], entries=entries, seed=data.get("seed"))


@dataclass(frozen=True)
class ComposeConfig:
    min_paste_area: int = 64
    feather_radius: int = 0
    paste_order: str = "area_desc"
    scale_on_rotated: bool = True

    def __post_init__(self):
        if self.paste_order not in PASTE_ORDERS:
            raise ValueError(
                f"paste_order must be one of {PASTE_ORDERS}, got {self.paste_order!r}"
            )
        if self.min_paste_area < 1:
            raise ValueError("min_paste_area must be >= 1")
        if self.feather_radius < 0:
            raise ValueError("feather_radius must be >= 0")


def plan_alignment(
    cutout: InstanceCutout,
    target: SceneInstance,
    scale_on_rotated: bool = True,
) -> AlignmentPlan:
    """Alignment plan for pasting ``cutout`` over ``target``.

    Rotation is the minimal signed axis correction between the two PCA
    major axes; if either party is near-isotropic (no meaningful axis)
    the rotation is 0 by the deterministic tie-break.  The scale factor
    covers the target bbox, measured by default on the rotated cutout
    bbox; the translation puts the cutout centroid on the target centroid.
    """
    real_axes = compute_pca(cutout.mask)
    sim_axes = target.axes
    if real_axes.is_isotropic() or sim_axes.is_isotropic():
        theta = 0.0
    else:
        theta = rotation_angle(real_axes, sim_axes)
    if theta != 0.0 and scale_on_rotated:
        rw, rh = rotated_bbox_dims(cutout.mask, theta)
        real_box = BBox(0.0, 0.0, rw, rh)
    else:
        real_box = mask_bbox(cutout.mask)
    return AlignmentPlan(
        theta_rot=theta,
        scale=scale_factor(target.bbox, real_box),
        target_centroid=sim_axes.centroid,
    )


def transform_cutout(
    cutout: InstanceCutout,
    plan: AlignmentPlan,
    scene_size: tuple[int, int],
) -> PlacedCutout:
    """Rotate about the mask centroid, scale uniformly, and move the
    centroid onto the plan target, as one affine resampling pass.

    Color is resampled bilinearly, the mask nearest-neighbor.  The output
    raster covers the transformed footprint clipped to the ``(W, H)``
    scene; ``OutOfFrameError`` is raised when that clip is empty.
    """
    scene_w, scene_h = scene_size
    pts = foreground_points(cutout.mask)
    if pts.shape[0] == 0:
        raise EmptyMaskError(f"cutout {cutout.id!r} has an empty mask")
    centroid = pts.mean(axis=0)
    c, s = math.cos(plan.theta_rot), math.sin(plan.theta_rot)
    lin = plan.scale * np.array([[c, -s], [s, c]], dtype=np.float64)
    offset = np.asarray(plan.target_centroid, dtype=np.float64) - lin @ centroid

    src_h, src_w = cutout.mask.shape
    corners = np.array(
        [
            [-0.5, -0.5],
            [src_w - 0.5, -0.5],
            [-0.5, src_h - 0.5],
            [src_w - 0.5, src_h - 0.5],
        ]
    )
    mapped = corners @ lin.T + offset
    fx0 = int(math.ceil(mapped[:, 0].min()))
    fx1 = int(math.floor(mapped[:, 0].max())) + 1
    fy0 = int(math.ceil(mapped[:, 1].min()))
    fy1 = int(math.floor(mapped[:, 1].max())) + 1
    x0, x1 = max(0, fx0), min(scene_w, fx1)
    y0, y1 = max(0, fy0), min(scene_h, fy1)
    if x0 >= x1 or y0 >= y1:
        raise OutOfFrameError(
            f"cutout {cutout.id!r} maps entirely outside the {scene_w}x{scene_h} frame"
        )

    # warp the whole footprint so the pre-clip bbox is measurable, then
    # slice the frame overlap for the placed raster
    warp = np.hstack([lin, (offset - np.array([fx0, fy0])).reshape(2, 1)])
    size = (fx1 - fx0, fy1 - fy0)
    color = cv2.warpAffine(
        cutout.color,
        warp,
        size,
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=0,
    )
    mask = (
        cv2.warpAffine(
            cutout.mask.astype(np.uint8) * 255,
            warp,
            size,
            flags=cv2.INTER_NEAREST,
            borderMode=cv2.BORDER_CONSTANT,
            borderValue=0,
        )
        > 0
    )
    if not mask.any():
        raise OutOfFrameError(
            f"cutout {cutout.id!r} collapsed to zero foreground under the transform"
        )
    full = mask_bbox(mask)
    full_bbox = (
        fx0 + int(full.x_min),
        fy0 + int(full.y_min),
        int(full.width),
        int(full.height),
    )
    window = (slice(y0 - fy0, y1 - fy0), slice(x0 - fx0, x1 - fx0))
    return PlacedCutout(
        cutout_id=cutout.id,
        color=color[window],
        mask=mask[window],
        x0=x0,
        y0=y0,
        full_bbox=full_bbox,
    )


def clip_to_target(transformed_mask: np.ndarray, target_mask: np.ndarray) -> np.ndarray:
    """Pixel-wise AND, keeping only the parts common to the target so
    occlusions already present in the target survive the paste.

    An empty intersection is a legal result; the caller decides whether
    to skip.
    """
    a = as_mask(transformed_mask)
    b = as_mask(target_mask)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a & b


def blend(
    scene: np.ndarray,
    placed: PlacedCutout,
    clip: np.ndarray,
    feather_radius: int = 0,
) -> np.ndarray:
    """Paste the cutout pixels inside ``clip`` onto a copy of ``scene``.

    With ``feather_radius`` r > 0 the alpha ramps linearly from 0 at the
    clip boundary to 1 at depth r inside it (distance-transform weights).
    Pixels outside the clip come back bit-identical.  Assumes
    ``clip`` is a subset of the placed cutout's footprint.
    """
    clip = as_mask(clip)
    if scene.shape[:2] != clip.shape:
        raise ShapeMismatchError(
            f"scene {scene.shape[:2]} vs clip {clip.shape} dimensions differ"
        )
    h, w = placed.mask.shape
    canvas = np.zeros_like(scene)
    canvas[placed.y0 : placed.y0 + h, placed.x0 : placed.x0 + w] = placed.color
    if feather_radius <= 0:
        out = scene.copy()
        out[clip] = canvas[clip]
        return out
    dist = ndimage.distance_transform_edt(clip)
    alpha = np.minimum(dist / float(feather_radius), 1.0)[..., None]
    mixed = alpha * canvas.astype(np.float64) + (1.0 - alpha) * scene.astype(np.float64)
    return np.rint(mixed).astype(np.uint8)


def compose_scene(
    scene_image: np.ndarray,
    instances: list[SceneInstance],
    buffer: CutoutBuffer,
    rng: np.random.Generator,
    config: ComposeConfig = ComposeConfig(),
    scene_id: str = "",
    seed: Optional[int] = None,
) -> tuple[np.ndarray, CompositeRecord]:
    """Paste one sampled cutout onto every synthetic instance.

    Instances are processed largest-first by default so nearer (smaller)
    pastes land on top; each gets the sample -> plan -> transform -> clip
    -> blend chain.  Per-instance failures and undersized targets are
    recorded as skips.  Deterministic for a fixed (inputs, rng, config).
    """
    if len(buffer.items) == 0:
        raise EmptyBufferError("compose requires a non-empty cutout buffer")
    scene_h, scene_w = scene_image.shape[:2]
    if config.paste_order == "area_desc":
        ordered = sorted(instances, key=lambda t: (-t.area, t.instance_id))
    else:
        ordered = sorted(instances, key=lambda t: t.instance_id)
    out = scene_image.copy()
    record = CompositeRecord(scene_id=scene_id, seed=seed)
    for inst in ordered:
        if inst.area < config.min_paste_area:
            record.entries.append(
                PasteEntry(
                    inst.instance_id,
                    skipped=True,
                    reason=(
                        f"target area {inst.area} px below "
                        f"min_paste_area {config.min_paste_area}"
                    ),
                )
            )
            continue
        cut = sample_cutout(buffer, rng)
        try:
            plan = plan_alignment(cut, inst, config.scale_on_rotated)
            placed = transform_cutout(cut, plan, (scene_w, scene_h))
        except VinegraftError as exc:
            record.entries.append(
                PasteEntry(
                    inst.instance_id,
                    skipped=True,
                    reason=f"{type(exc).__name__}: {exc}",
                    cutout_id=cut.id,
                )
            )
            continue
        clip = clip_to_target(placed.scene_mask((scene_h, scene_w)), inst.mask)
        clipped_area = int(np.count_nonzero(clip))
        if clipped_area == 0:
            record.entries.append(
                PasteEntry(
                    inst.instance_id,
                    skipped=True,
                    reason="empty clip",
                    cutout_id=cut.id,
                    theta_rot=plan.theta_rot,
                    scale=plan.scale,
                )
            )
            continue
        out = blend(out, placed, clip, config.feather_radius)
        record.entries.append(
            PasteEntry(
                inst.instance_id,
                skipped=False,
                cutout_id=cut.id,
                theta_rot=plan.theta_rot,
                scale=plan.scale,
                target_centroid=plan.target_centroid,
                clipped_area_px=clipped_area,
                placed_bbox=placed.full_bbox,
            )
        )
    return out, record
