"""Deterministic synthetic fixtures: a canonical face frame, pose/jitter
helpers, and a generated benchmark atlas.

The synthetic face is upright with its inter-brow midpoint at the image
center, vertices spread over a face-shaped ellipse, and a smooth z dome so
out-of-plane rotations are meaningful. Semantic indices follow the usual
468-vertex mesh conventions but the geometry is synthetic; nothing here is
a clinical claim.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .geometry import MESH_VERTEX_COUNT, LandmarkFrame, SemanticsConfig

_BROW_LEFT = 55
_BROW_RIGHT = 285
_EYE_LEFT = (33, 133, 159, 145)
_EYE_RIGHT = (263, 362, 386, 374)
_FOREHEAD_TOP = 10
_MIDLINE = (10, 151, 9, 8, 168, 6, 197, 195, 5, 4)

_FIXED_VERTICES = {
    _BROW_LEFT: (0.46, 0.50),
    _BROW_RIGHT: (0.54, 0.50),
    33: (0.38, 0.56),
    133: (0.46, 0.56),
    159: (0.42, 0.53),
    145: (0.42, 0.59),
    263: (0.62, 0.56),
    362: (0.54, 0.56),
    386: (0.58, 0.53),
    374: (0.58, 0.59),
    10: (0.50, 0.30),
    151: (0.50, 0.35),
    9: (0.50, 0.42),
    8: (0.50, 0.47),
    168: (0.50, 0.52),
    6: (0.50, 0.56),
    197: (0.50, 0.60),
    195: (0.50, 0.63),
    5: (0.50, 0.66),
    4: (0.50, 0.69),
}


def default_semantics() -> SemanticsConfig:
    return SemanticsConfig(
        medial_brow_left=_BROW_LEFT,
        medial_brow_right=_BROW_RIGHT,
        eye_contour_left=_EYE_LEFT,
        eye_contour_right=_EYE_RIGHT,
        forehead_top=_FOREHEAD_TOP,
        midline_indices=_MIDLINE,
    )


def _dome_z(x: float, y: float) -> float:
    nx = (x - 0.5) / 0.16
    ny = (y - 0.55) / 0.24
    return 0.03 * (nx * nx + ny * ny) - 0.06


def synthetic_frame(ts: int = 0, width: int = 512, height: int = 512, seed: int = 7) -> LandmarkFrame:
    """The canonical upright fixture."""
    rng = random.Random(seed)
    vertices = np.zeros((MESH_VERTEX_COUNT, 3))
    for i in range(MESH_VERTEX_COUNT):
        if i in _FIXED_VERTICES:
            x, y = _FIXED_VERTICES[i]
        else:
            # uniform over the face ellipse
            r = math.sqrt(rng.random())
            theta = rng.random() * 2 * math.pi
            x = 0.5 + 0.16 * r * math.cos(theta)
            y = 0.55 + 0.24 * r * math.sin(theta)
        vertices[i] = (x, y, _dome_z(x, y))
    return LandmarkFrame(timestamp=ts, width=width, height=height, vertices=vertices)


def translate_frame(frame: LandmarkFrame, dx: float, dy: float) -> LandmarkFrame:
    """Shift all vertices by (dx, dy) normalized units. Drops any hair mask
    (a raster cannot be shifted by fractional pixels)."""
    v = frame.vertices.copy()
    v[:, 0] += dx
    v[:, 1] += dy
    return LandmarkFrame(frame.timestamp, frame.width, frame.height, v)


def rotate_frame_inplane(
    frame: LandmarkFrame, degrees: float, center: tuple[float, float] = (0.5, 0.5)
) -> LandmarkFrame:
    """Roll the face in the image plane about a normalized center point.

    The rotation is physically rigid (performed in aspect-true coordinates),
    so for a square frame it is a plain rotation of the normalized
    coordinates. Drops any hair mask.
    """
    a = frame.width / frame.height
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    cx, cy = center[0] * a, center[1]
    v = frame.vertices.copy()
    qx = v[:, 0] * a - cx
    qy = v[:, 1] - cy
    v[:, 0] = (qx * c - qy * s + cx) / a
    v[:, 1] = qx * s + qy * c + cy
    return LandmarkFrame(frame.timestamp, frame.width, frame.height, v)


def perturb_frame(frame: LandmarkFrame, scale: float = 0.01, seed: int = 0) -> LandmarkFrame:
    """Add seeded gaussian jitter to every vertex."""
    rng = np.random.default_rng(seed)
    v = frame.vertices.copy()
    v += rng.normal(0.0, scale, size=v.shape)
    return LandmarkFrame(frame.timestamp, frame.width, frame.height, v)


def with_hair_mask(frame: LandmarkFrame, hair_below_y: float) -> LandmarkFrame:
    """Attach a synthetic mask: hair fills every full pixel row above the
    given normalized y."""
    rows = int(math.floor(hair_below_y * frame.height))
    mask = np.zeros((frame.height, frame.width), dtype=bool)
    mask[:rows, :] = True
    return LandmarkFrame(frame.timestamp, frame.width, frame.height, frame.vertices, mask)


# ---------------------------------------------------------------------------
# Generated benchmark atlas
# ---------------------------------------------------------------------------

_RHD_ROWS = [
    "RHD,1,Yintang,brow,0.5*GetX(M55)+0.5*GetX(M285),0.5*GetY(M55)+0.5*GetY(M285),FALSE,midpoint of the medial brow ends",
    "RHD,2,Hairline,forehead,GetX(M_HAIRLINE),GetY(M_HAIRLINE),FALSE,anterior hairline on the midline",
    "RHD,3,Pupil,eye,0.25*(GetX(M263)+GetX(M362)+GetX(M386)+GetX(M374)),"
    "0.25*(GetY(M263)+GetY(M362)+GetY(M386)+GetY(M374)),TRUE,eye-contour centroid",
]


def make_bench_atlas(rows: int = 73, seed: int = 3) -> str:
    """A synthetic atlas of the requested size for benchmarks and stress
    tests: RHD anchors plus generated points split roughly into thirds of
    mesh-direct, single-step proportional, and chained proportional rows."""
    if rows < 4:
        raise ValueError("need at least the 3 RHD rows plus one acupoint")
    rng = random.Random(seed)
    lines = ["Channel,ID,NameE,Region,FaceMeshX,FaceMeshY,IsSymmetry,Comments"]
    lines += _RHD_ROWS

    n = rows - len(_RHD_ROWS)
    n_direct = max(1, round(n * 2 / 7))
    n_one = max(1, round(n * 3 / 7))
    n_multi = n - n_direct - n_one

    chainable = []
    k = 0
    for i in range(n_direct):
        k += 1
        idx = (17 + 23 * i) % MESH_VERTEX_COUNT
        lines.append(f"BD,{k},Bench point {k},synthetic,GetX(M{idx}),GetY(M{idx}),FALSE,-")
    for i in range(n_one):
        k += 1
        a = round(rng.uniform(-1.5, 1.5), 2)
        b = round(rng.uniform(0.25, 2.5), 2)
        anchor = "RHD3.R" if i % 3 else "RHD1"
        lines.append(
            f"BO,{k},Bench point {k},synthetic,"
            f"GetX({anchor})+{a}*U,GetY({anchor})+{b}*U,FALSE,-"
        )
        chainable.append(f"BO{k}")
    for i in range(n_multi):
        k += 1
        parent = chainable[rng.randrange(len(chainable))]
        a = round(rng.uniform(-1.0, 1.0), 2)
        b = round(rng.uniform(0.25, 1.5), 2)
        lines.append(
            f"BM,{k},Bench point {k},synthetic,"
            f"GetX({parent})+{a}*U,GetY({parent})+{b}*U,FALSE,-"
        )
        chainable.append(f"BM{k}")
    return "\n".join(lines) + "\n"
