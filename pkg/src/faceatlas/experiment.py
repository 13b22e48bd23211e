"""Pose-sweep accuracy experiment.

Ground truth at desk scale: evaluate the frontal fixture, give each result
point the depth of its nearest mesh vertex, and transport it rigidly through
the same 3D rotation applied to the vertices. The measurement is a fresh
evaluation on the rotated frame; the error is the pixel distance between
the two. This is an internal-consistency oracle, not an annotated one, and
reports say so.

Axis naming follows the data-file convention used throughout this project:
pitch rotates about X, roll about Y, and yaw about Z (so "yaw" here is the
in-plane rotation that alignment removes exactly).
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .atlas import AtlasProgram, Complexity
from .evaluator import evaluate_atlas
from .geometry import LandmarkFrame, SemanticsConfig

POSES = (
    ("frontal", None, 0.0),
    ("pitch+10", "X", 10.0),
    ("roll+10", "Y", 10.0),
    ("yaw+10", "Z", 10.0),
)


def _rotation_matrix(axis: str, degrees: float) -> np.ndarray:
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    if axis == "X":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)
    if axis == "Y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)
    if axis == "Z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)
    raise ValueError(f"axis must be X, Y or Z, got {axis!r}")


def pose_transform(frame: LandmarkFrame, axis: str, degrees: float) -> LandmarkFrame:
    """Rigidly rotate all vertices in 3D about their centroid, then project
    orthographically back onto the image plane (z is carried along).

    Any hair mask is dropped: a raster cannot follow an out-of-plane
    rotation, so transformed fixtures rely on the hairline fallback.
    """
    r = _rotation_matrix(axis, degrees)
    v = frame.vertices
    centroid = v.mean(axis=0)
    rotated = (v - centroid) @ r.T + centroid
    return LandmarkFrame(frame.timestamp, frame.width, frame.height, rotated)


def _transport_points(points_xyz: np.ndarray, vertices: np.ndarray, axis: str, degrees: float) -> np.ndarray:
    """Apply the exact vertex rotation (same centroid) to ground-truth points."""
    r = _rotation_matrix(axis, degrees)
    centroid = vertices.mean(axis=0)
    return (points_xyz - centroid) @ r.T + centroid


@dataclass(frozen=True)
class PoseSweepReport:
    """Mean pixel error per pose and complexity class, plus group means."""

    poses: tuple                  # pose names in sweep order
    mean_error_px: dict           # pose -> {complexity value -> mean px error or None}
    class_means_px: dict          # complexity value -> mean over poses
    degenerate_poses: tuple
    point_count: int
    runtime_s: float

    def as_dict(self) -> dict:
        return {
            "ground_truth": "frontal evaluation transported rigidly (internal consistency)",
            "poses": list(self.poses),
            "mean_error_px": {p: dict(v) for p, v in self.mean_error_px.items()},
            "class_means_px": dict(self.class_means_px),
            "degenerate_poses": list(self.degenerate_poses),
            "point_count": self.point_count,
            "runtime_s": self.runtime_s,
        }


def accuracy_experiment(
    program: AtlasProgram,
    frame: LandmarkFrame,
    cfg: SemanticsConfig,
    poses=POSES,
) -> PoseSweepReport:
    """Sweep poses and compare measurements against transported ground truth."""
    started = time.perf_counter()
    frontal = evaluate_atlas(program, frame, cfg)
    if frontal.degenerate:
        raise ValueError("frontal fixture is degenerate; experiment needs a valid face")

    keys = [(p.id, p.side) for p in frontal.points]
    norm = np.array([p.position_norm for p in frontal.points])
    # depth for transport: nearest mesh vertex of the frontal frame
    vxy = frame.vertices[:, :2]
    nearest = np.argmin(
        ((norm[:, None, :] - vxy[None, :, :]) ** 2).sum(axis=2), axis=1
    )
    gt_xyz = np.column_stack([norm, frame.vertices[nearest, 2]])

    px_scale = np.array([frame.width, frame.height], dtype=float)
    classes = {pid: program.complexity(pid).value for pid in program.points}

    mean_error: dict[str, dict[str, Optional[float]]] = {}
    degenerate: list[str] = []
    per_class_pools: dict[str, list[float]] = {c.value: [] for c in Complexity}

    for name, axis, degrees in poses:
        if axis is None:
            measured_atlas = frontal
            gt = gt_xyz[:, :2]
        else:
            posed = pose_transform(frame, axis, degrees)
            measured_atlas = evaluate_atlas(program, posed, cfg)
            gt = _transport_points(gt_xyz, frame.vertices, axis, degrees)[:, :2]
        if measured_atlas.degenerate:
            degenerate.append(name)
            mean_error[name] = {c.value: None for c in Complexity}
            continue
        measured = {(p.id, p.side): p.position_norm for p in measured_atlas.points}
        errors: dict[str, list[float]] = {c.value: [] for c in Complexity}
        for (pid, side), gt_pt in zip(keys, gt):
            m = np.asarray(measured[(pid, side)])
            err_px = float(np.linalg.norm((m - gt_pt) * px_scale))
            errors[classes[pid]].append(err_px)
        mean_error[name] = {
            c: (statistics.fmean(v) if v else None) for c, v in errors.items()
        }
        for c, v in errors.items():
            per_class_pools[c].extend(v)

    class_means = {c: (statistics.fmean(v) if v else None) for c, v in per_class_pools.items()}
    return PoseSweepReport(
        poses=tuple(name for name, _, _ in poses),
        mean_error_px=mean_error,
        class_means_px=class_means,
        degenerate_poses=tuple(degenerate),
        point_count=len(keys),
        runtime_s=time.perf_counter() - started,
    )
