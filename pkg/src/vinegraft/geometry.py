"""Binary-mask geometry: bounding boxes, principal axes, and alignment math.

Masks are plain ``(H, W)`` boolean numpy arrays, True meaning foreground.
Coordinates are ``(x, y)`` with x = column and y = row; angles are measured
as ``atan2(y, x)`` in that frame.  Axis orientations are only observable
modulo pi, so every angle handed out by this module is canonicalized into
``(-pi/2, pi/2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMaskError, EmptyMaskError

# Eigenvalue gap below which a pixel cloud is treated as isotropic and the
# major axis falls back to (1, 0).
ISOTROPY_EPS = 1e-9


def as_mask(raster: np.ndarray) -> np.ndarray:
    """Coerce to a 2-D boolean mask."""
    arr = np.asarray(raster)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def foreground_points(mask: np.ndarray) -> np.ndarray:
    """(N, 2) float64 array of (x, y) coordinates of foreground pixels."""
    ys, xs = np.nonzero(as_mask(mask))
    return np.column_stack((xs, ys)).astype(np.float64)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: inclusive top-left corner, dimensions >= 1.

    Values are pixels when derived from a mask but may be fractional for
    detections read back from normalized labels.  ``x_max``/``y_max`` are
    the exclusive continuous edges (``x_min + width``).
    """

    x_min: float
    y_min: float
    width: float
    height: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(
                f"box dimensions must be >= 1, got {self.width} x {self.height}"
            )

    @property
    def x_max(self) -> float:
        return self.x_min + self.width

    @property
    def y_max(self) -> float:
        return self.y_min + self.height

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class PrincipalAxes:
    """Centroid and orthonormal principal directions of a pixel cloud.

    ``major`` is canonicalized so its angle lies in ``(-pi/2, pi/2]``;
    ``minor`` is ``major`` rotated by +90 degrees.  ``variances`` holds the
    population eigenvalues, largest first.
    """

    centroid: tuple[float, float]
    major: tuple[float, float]
    minor: tuple[float, float]
    variances: tuple[float, float]

    @property
    def angle(self) -> float:
        """Major-axis orientation in radians, in ``(-pi/2, pi/2]``."""
        return math.atan2(self.major[1], self.major[0])

    @property
    def elongation(self) -> float:
        """Variance ratio lambda1 / lambda2 (inf for a collinear cloud)."""
        if self.variances[1] == 0.0:
            return math.inf
        return self.variances[0] / self.variances[1]

    def is_isotropic(self, eps: float = ISOTROPY_EPS) -> bool:
        return self.variances[0] - self.variances[1] < eps


@dataclass(frozen=True)
class AlignmentPlan:
    """Rotation, uniform scale, and target position for one paste.

    ``theta_rot`` is the signed minimal axis correction, always within
    ``(-pi/2, pi/2]``; ``scale`` is a finite positive factor applied
    uniformly to both dimensions.
    """

    theta_rot: float
    scale: float
    target_centroid: tuple[float, float]

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if abs(self.theta_rot) > math.pi / 2 + 1e-12:
            raise ValueError(f"theta_rot outside (-pi/2, pi/2]: {self.theta_rot}")


def mask_bbox(mask: np.ndarray) -> BBox:
    """Tightest axis-aligned box containing every foreground pixel.

    Raises ``EmptyMaskError`` when the mask has no foreground.
    """
    m = as_mask(mask)
    cols = np.flatnonzero(m.any(axis=0))
    if cols.size == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    rows = np.flatnonzero(m.any(axis=1))
    return BBox(
        x_min=int(cols[0]),
        y_min=int(rows[0]),
        width=int(cols[-1] - cols[0] + 1),
        height=int(rows[-1] - rows[0] + 1),
    )


def wrap_axis_angle(angle: float) -> float:
    """Wrap an angle into ``(-pi/2, pi/2]``, treating directions modulo pi."""
    a = math.fmod(angle, math.pi)
    if a > math.pi / 2:
        a -= math.pi
    elif a <= -math.pi / 2:
        a += math.pi
    return a


def compute_pca(mask: np.ndarray) -> PrincipalAxes:
    """Population PCA over the integer coordinates of foreground pixels.

    The covariance is unweighted and divided by N.  The major eigenvector
    is canonicalized into ``(-pi/2, pi/2]``; for near-isotropic clouds
    (eigen-gap below ``ISOTROPY_EPS``) the major axis is pinned to (1, 0)
    so downstream rotation decisions stay deterministic.

    Raises ``EmptyMaskError`` for a blank mask and ``DegenerateMaskError``
    when fewer than two foreground pixels are present.
    """
    ys, xs = np.nonzero(as_mask(mask))
    n = int(xs.size)
    if n == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    if n < 2:
        raise DegenerateMaskError("principal axes need at least 2 foreground pixels")
    # central moments over exact integer sums: no cancellation error, and
    # the covariance is bit-identical under integer translations
    xs64 = xs.astype(np.int64)
    ys64 = ys.astype(np.int64)
    sx, sy = int(xs64.sum()), int(ys64.sum())
    sxx = int(np.dot(xs64, xs64))
    sxy = int(np.dot(xs64, ys64))
    syy = int(np.dot(ys64, ys64))
    nn = n * n
    cov = np.array(
        [
            [(n * sxx - sx * sx) / nn, (n * sxy - sx * sy) / nn],
            [(n * sxy - sx * sy) / nn, (n * syy - sy * sy) / nn],
        ]
    )
    centroid = (sx / n, sy / n)
    evals, evecs = np.linalg.eigh(cov)
    lam1 = float(max(evals[1], 0.0))
    lam2 = float(min(max(evals[0], 0.0), lam1))
    if lam1 - lam2 < ISOTROPY_EPS:
        major = (1.0, 0.0)
    else:
        vx, vy = float(evecs[0, 1]), float(evecs[1, 1])
        ang = math.atan2(vy, vx)
        if ang > math.pi / 2 or ang <= -math.pi / 2:
            vx, vy = -vx, -vy
        major = (vx, vy)
    minor = (-major[1], major[0])
    return PrincipalAxes(
        centroid=centroid,
        major=major,
        minor=minor,
        variances=(lam1, lam2),
    )


def rotation_angle(real: PrincipalAxes, sim: PrincipalAxes) -> float:
    """Smallest signed rotation taking the real major axis onto the sim one.

    Axis alignment is modulo pi, so this is the wrap of
    ``sim.angle - real.angle`` into ``(-pi/2, pi/2]``: rotating the real
    axis by the returned value makes it parallel, up to sign, to the sim
    axis, and no rotation of smaller magnitude does.
    """
    return wrap_axis_angle(sim.angle - real.angle)


def scale_factor(sim_box: BBox, real_box: BBox) -> float:
    """Uniform factor ``max(sim_w / real_w, sim_h / real_h)``.

    The max of the per-dimension ratios guarantees the scaled real box
    covers the sim box in both dimensions.
    """
    return max(sim_box.width / real_box.width, sim_box.height / real_box.height)


def rotated_bbox_dims(mask: np.ndarray, theta: float) -> tuple[float, float]:
    """Bounding-box dimensions of the foreground after rotating pixel
    centers by ``theta``.

    Pure coordinate transform, no resampling.  Uses the pixel-count
    convention (coordinate extent + 1) so ``theta = 0`` reproduces
    ``mask_bbox`` dimensions exactly.
    """
    pts = foreground_points(mask)
    if pts.shape[0] == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    c, s = math.cos(theta), math.sin(theta)
    x = pts[:, 0] * c - pts[:, 1] * s
    y = pts[:, 0] * s + pts[:, 1] * c
    return (float(x.max() - x.min() + 1.0), float(y.max() - y.min() + 1.0))
