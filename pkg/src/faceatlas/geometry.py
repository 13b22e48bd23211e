"""Coordinate conventions, face alignment, and reference-point extraction.

Frames arrive as 468 mesh vertices in normalized image coordinates (origin
top-left, y down, x scaled by width and y by height). All proportional math
runs in *aligned space*: an isotropic, height-normalized plane in which the
facial midline is vertical and face-up is -y. Alignment is a pure rotation
plus translation (no scale), anchored so that a face that is already upright
with its inter-brow midpoint at the image center maps through the identity.

Aligned coordinates are therefore invariant under in-plane rigid motion of
the face, which is what makes cun arithmetic well-defined under head roll.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DegenerateFace, FrameFormatError

MESH_VERTEX_COUNT = 468

# degeneracy threshold, in normalized units: far below landmark noise,
# far above float error
EPSILON = 1e-6

# fixed aligned-space anchor for the inter-brow midpoint, in height units
_ANCHOR_Y = 0.5
_ANCHOR_X_NORM = 0.5  # times aspect ratio in aligned units


class Confidence(str, Enum):
    MEASURED = "measured"
    ESTIMATED = "estimated"


# ---------------------------------------------------------------------------
# Input types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LandmarkFrame:
    """One timestamped set of 468 mesh vertices plus an optional hair mask.

    vertices: (468, 3) float array, normalized image coordinates (x, y, z).
    hair_mask: optional (height, width) bool array, True where hair.
    """

    timestamp: int
    width: int
    height: int
    vertices: np.ndarray
    hair_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (MESH_VERTEX_COUNT, 3):
            raise FrameFormatError(
                f"expected {MESH_VERTEX_COUNT} (x, y, z) vertices, got shape {v.shape}"
            )
        if not np.isfinite(v).all():
            raise FrameFormatError("vertex coordinates must be finite")
        if self.width <= 0 or self.height <= 0:
            raise FrameFormatError(f"frame size must be positive, got {self.width}x{self.height}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        if self.hair_mask is not None:
            m = np.asarray(self.hair_mask, dtype=bool)
            if m.shape != (self.height, self.width):
                raise FrameFormatError(
                    f"hair mask shape {m.shape} does not match frame {self.height}x{self.width}"
                )
            m = m.copy()
            m.flags.writeable = False
            object.__setattr__(self, "hair_mask", m)


@dataclass(frozen=True)
class SemanticsConfig:
    """Which mesh vertices carry which anatomy. Editable data, not ground truth."""

    medial_brow_left: int
    medial_brow_right: int
    eye_contour_left: tuple[int, ...]
    eye_contour_right: tuple[int, ...]
    forehead_top: int
    midline_indices: tuple[int, ...]
    # how far past the forehead-top vertex the estimated hairline sits,
    # as a multiple of the brow-midpoint-to-forehead-top distance
    hairline_fallback_factor: float = 1.10

    def __post_init__(self):
        object.__setattr__(self, "eye_contour_left", tuple(self.eye_contour_left))
        object.__setattr__(self, "eye_contour_right", tuple(self.eye_contour_right))
        object.__setattr__(self, "midline_indices", tuple(self.midline_indices))
        indices = [self.medial_brow_left, self.medial_brow_right, self.forehead_top]
        indices += list(self.eye_contour_left) + list(self.eye_contour_right)
        indices += list(self.midline_indices)
        for idx in indices:
            if not 0 <= idx < MESH_VERTEX_COUNT:
                raise ValueError(f"vertex index out of range: {idx}")
        if set(self.eye_contour_left) & set(self.eye_contour_right):
            raise ValueError("eye contour index sets overlap")
        if not self.eye_contour_left or not self.eye_contour_right:
            raise ValueError("eye contour index sets must be non-empty")
        if not self.midline_indices:
            raise ValueError("midline_indices must be non-empty")
        if self.hairline_fallback_factor <= 0:
            raise ValueError("hairline_fallback_factor must be positive")


# ---------------------------------------------------------------------------
# Aligned space
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AlignedFrame:
    """A frame canonicalized so the facial midline is vertical.

    The transform maps *aspect space* (normalized x stretched by width/height
    so both axes share the same physical scale) into aligned space:
    ``aligned = R(angle) @ p + translation``. Scale is exactly 1, so aligned
    lengths are in height units.
    """

    frame: LandmarkFrame
    angle: float
    translation: np.ndarray  # shape (2,)
    vertices: np.ndarray     # (468, 3): aligned x, y plus carried z
    midline_x: float

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).copy()
        t.flags.writeable = False
        object.__setattr__(self, "translation", t)
        v = np.asarray(self.vertices, dtype=float).copy()
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        c, s = math.cos(self.angle), math.sin(self.angle)
        rot = np.array([[c, -s], [s, c]])
        rot.flags.writeable = False
        object.__setattr__(self, "_rot", rot)

    @property
    def aspect(self) -> float:
        return self.frame.width / self.frame.height

    def _rotation(self) -> np.ndarray:
        return self._rot

    def to_aligned(self, norm_xy) -> np.ndarray:
        """Map normalized image coordinates into aligned space."""
        p = np.asarray(norm_xy, dtype=float)
        q = np.stack([p[..., 0] * self.aspect, p[..., 1]], axis=-1)
        return q @ self._rotation().T + self.translation

    def to_norm(self, aligned_xy) -> np.ndarray:
        """Map aligned coordinates back to normalized image coordinates."""
        p = np.asarray(aligned_xy, dtype=float)
        q = (p - self.translation) @ self._rotation()
        return np.stack([q[..., 0] / self.aspect, q[..., 1]], axis=-1)

    def to_pixels(self, aligned_xy) -> np.ndarray:
        n = self.to_norm(aligned_xy)
        return n * np.array([self.frame.width, self.frame.height], dtype=float)


@dataclass(frozen=True)
class ReferencePoints:
    """Anchors of the proportional system: RHD1 (yintang, between the medial
    brow ends), RHD2 (anterior hairline on the midline), RHD3 (the pupils)."""

    rhd1: np.ndarray
    rhd2: np.ndarray
    rhd3_left: np.ndarray
    rhd3_right: np.ndarray
    rhd2_confidence: Confidence

    def __post_init__(self):
        for name in ("rhd1", "rhd2", "rhd3_left", "rhd3_right"):
            p = np.asarray(getattr(self, name), dtype=float).copy()
            p.flags.writeable = False
            object.__setattr__(self, name, p)
        if self.rhd1[1] - self.rhd2[1] < EPSILON:
            raise DegenerateFace(
                "hairline reference is not above the inter-brow point "
                f"(rhd1.y={self.rhd1[1]:.6f}, rhd2.y={self.rhd2[1]:.6f})"
            )


@dataclass(frozen=True)
class CunUnit:
    """Aligned-space length of one cun."""

    uc: float

    def __post_init__(self):
        if not self.uc > 0:
            raise DegenerateFace(f"unit cun must be positive, got {self.uc}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def align_frame(frame: LandmarkFrame, cfg: SemanticsConfig) -> AlignedFrame:
    """Canonicalize a frame: midline vertical, brow midpoint at the anchor.

    The in-plane face orientation is taken from the medial-brow segment; its
    perpendicular (pointing toward the forehead for a left-to-right brow
    order) becomes aligned -y. Rotation is about the brow midpoint, which
    then lands on a fixed anchor, so aligned coordinates do not move when
    the face translates or rolls inside the image.
    """
    aspect = frame.width / frame.height
    xy = frame.vertices[:, :2] * np.array([aspect, 1.0])

    brow_l = xy[cfg.medial_brow_left]
    brow_r = xy[cfg.medial_brow_right]
    u = brow_r - brow_l
    norm_u = float(np.hypot(u[0], u[1]))
    if norm_u < EPSILON:
        raise DegenerateFace("medial brow vertices coincide; midline direction undefined")

    # perpendicular of the brow axis, pointing up the face
    n = np.array([u[1], -u[0]]) / norm_u
    angle = -math.pi / 2 - math.atan2(n[1], n[0])

    center = (brow_l + brow_r) / 2.0
    anchor = np.array([_ANCHOR_X_NORM * aspect, _ANCHOR_Y])
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    translation = anchor - rot @ center

    aligned_xy = xy @ rot.T + translation
    vertices = np.column_stack([aligned_xy, frame.vertices[:, 2]])
    return AlignedFrame(
        frame=frame,
        angle=angle,
        translation=translation,
        vertices=vertices,
        midline_x=float(anchor[0]),
    )


def extract_hairline(
    frame: LandmarkFrame, aligned: AlignedFrame, cfg: SemanticsConfig
) -> tuple[np.ndarray, Confidence]:
    """Find RHD2: walk the aligned midline upward from the brow midpoint and
    return the first hair pixel of the mask, snapped to that pixel's center.

    Without a mask, or when the walk exits the image before meeting hair
    (bald subject, cropped forehead), falls back to the forehead-top vertex
    pushed further up the midline by ``hairline_fallback_factor``, and flags
    the result as estimated.
    """
    start = np.array([aligned.midline_x, _ANCHOR_Y])
    if frame.hair_mask is not None:
        w, h = frame.width, frame.height
        step = 0.5 / h  # half-pixel steps in aligned (height) units
        y = start[1]
        while True:
            y -= step
            norm = aligned.to_norm(np.array([aligned.midline_x, y]))
            col = math.floor(norm[0] * w)
            row = math.floor(norm[1] * h)
            if not (0 <= col < w and 0 <= row < h):
                break
            if frame.hair_mask[row, col]:
                # snap to the found pixel's center, projected onto the midline
                # so RHD1 -> RHD2 stays exactly vertical
                pixel_center = np.array([(col + 0.5) / w, (row + 0.5) / h])
                snapped_y = float(aligned.to_aligned(pixel_center)[1])
                return np.array([aligned.midline_x, snapped_y]), Confidence.MEASURED
    return _hairline_fallback(aligned, cfg), Confidence.ESTIMATED


def _hairline_fallback(aligned: AlignedFrame, cfg: SemanticsConfig) -> np.ndarray:
    top = aligned.vertices[cfg.forehead_top, :2]
    rise = _ANCHOR_Y - top[1]  # positive when the vertex sits above the brows
    y = _ANCHOR_Y - cfg.hairline_fallback_factor * rise
    return np.array([aligned.midline_x, y])


def extract_reference_points(
    aligned: AlignedFrame,
    hairline: np.ndarray,
    hairline_confidence: Confidence,
    cfg: SemanticsConfig,
) -> ReferencePoints:
    """Assemble the RHD anchors from the aligned mesh plus the hairline point."""
    v = aligned.vertices[:, :2]
    rhd1 = (v[cfg.medial_brow_left] + v[cfg.medial_brow_right]) / 2.0
    rhd3_left = v[list(cfg.eye_contour_left)].mean(axis=0)
    rhd3_right = v[list(cfg.eye_contour_right)].mean(axis=0)
    return ReferencePoints(
        rhd1=rhd1,
        rhd2=np.asarray(hairline, dtype=float),
        rhd3_left=rhd3_left,
        rhd3_right=rhd3_right,
        rhd2_confidence=hairline_confidence,
    )


def unit_cun(refs: ReferencePoints) -> CunUnit:
    """One cun is a third of the yintang-to-hairline distance.

    The midline is vertical in aligned space, so the vertical distance is
    the Euclidean one.
    """
    d = abs(float(refs.rhd1[1]) - float(refs.rhd2[1]))
    if d < EPSILON:
        raise DegenerateFace(f"yintang-to-hairline distance degenerate ({d:.2e})")
    return CunUnit(uc=d / 3.0)


def mirror_point(p, aligned: AlignedFrame) -> np.ndarray:
    """Reflect an aligned-space point across the facial midline."""
    p = np.asarray(p, dtype=float)
    return np.array([2.0 * aligned.midline_x - p[0], p[1]])


def midline_residual(aligned: AlignedFrame, cfg: SemanticsConfig) -> float:
    """RMS distance of the configured midline vertices from the aligned
    midline. Diagnostic only; large values mean the semantics config and the
    mesh disagree about where the midline is."""
    xs = aligned.vertices[list(cfg.midline_indices), 0]
    return float(np.sqrt(np.mean((xs - aligned.midline_x) ** 2)))
