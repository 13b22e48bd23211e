"""Frame and config file formats.

Landmark streams are JSONL: one object per line with keys ``ts`` (int,
microseconds, strictly increasing), ``w``/``h`` (pixels), ``v`` (468 [x,y,z]
triples, normalized), and optionally ``hair``: the binary hair mask,
run-length encoded row-major as space-separated run lengths that alternate
values starting with False (so a mask beginning with hair starts "0 ...").

The semantics config is JSON or TOML with the vertex-index assignments.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import FrameFormatError
from .geometry import MESH_VERTEX_COUNT, LandmarkFrame, SemanticsConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


# ---------------------------------------------------------------------------
# Hair-mask run-length codec
# ---------------------------------------------------------------------------

def encode_mask(mask: np.ndarray) -> str:
    """Row-major RLE: alternating run lengths, first run counts False pixels."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return ""
    changes = np.flatnonzero(np.diff(flat))
    bounds = np.concatenate([[0], changes + 1, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return " ".join(str(r) for r in runs)


def decode_mask(text: str, width: int, height: int) -> np.ndarray:
    try:
        runs = [int(t) for t in text.split()] if text.strip() else []
    except ValueError:
        raise FrameFormatError(f"hair mask RLE contains a non-integer run")
    if any(r < 0 for r in runs):
        raise FrameFormatError("hair mask RLE contains a negative run")
    total = sum(runs)
    if total != width * height:
        raise FrameFormatError(
            f"hair mask RLE covers {total} pixels, frame has {width * height}"
        )
    flat = np.zeros(width * height, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        flat[pos : pos + run] = value
        pos += run
        value = not value
    return flat.reshape(height, width)


# ---------------------------------------------------------------------------
# JSONL frames
# ---------------------------------------------------------------------------

def frame_from_obj(obj: dict) -> LandmarkFrame:
    """Build a frame from one decoded JSONL record (or protocol message)."""
    if not isinstance(obj, dict):
        raise FrameFormatError("frame record must be an object")
    try:
        ts = int(obj["ts"])
        w = int(obj["w"])
        h = int(obj["h"])
        v = obj["v"]
    except (KeyError, TypeError, ValueError) as e:
        raise FrameFormatError(f"frame record missing or malformed field: {e}")
    vertices = np.asarray(v, dtype=float)
    if vertices.ndim != 2 or vertices.shape != (MESH_VERTEX_COUNT, 3):
        raise FrameFormatError(
            f"'v' must be {MESH_VERTEX_COUNT} [x,y,z] triples, got shape {vertices.shape}"
        )
    mask = None
    if obj.get("hair") is not None:
        if not isinstance(obj["hair"], str):
            raise FrameFormatError("'hair' must be an RLE string")
        mask = decode_mask(obj["hair"], w, h)
    return LandmarkFrame(timestamp=ts, width=w, height=h, vertices=vertices, hair_mask=mask)


def frame_to_obj(frame: LandmarkFrame) -> dict:
    obj = {
        "ts": frame.timestamp,
        "w": frame.width,
        "h": frame.height,
        "v": [[float(x), float(y), float(z)] for x, y, z in frame.vertices],
    }
    if frame.hair_mask is not None:
        obj["hair"] = encode_mask(frame.hair_mask)
    return obj


def iter_frames_jsonl(lines: Iterable[str]) -> Iterator[LandmarkFrame]:
    """Parse a JSONL stream; raises FrameFormatError per bad line."""
    for line in lines:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FrameFormatError(f"bad JSON: {e}")
        yield frame_from_obj(obj)


def read_frames(path) -> list[LandmarkFrame]:
    with open(path, "r", encoding="utf-8") as f:
        return list(iter_frames_jsonl(f))


def write_frames(path, frames: Iterable[LandmarkFrame]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for frame in frames:
            f.write(json.dumps(frame_to_obj(frame)) + "\n")


# ---------------------------------------------------------------------------
# Semantics config
# ---------------------------------------------------------------------------

def semantics_from_obj(obj: dict) -> SemanticsConfig:
    try:
        return SemanticsConfig(
            medial_brow_left=int(obj["medial_brow_left"]),
            medial_brow_right=int(obj["medial_brow_right"]),
            eye_contour_left=tuple(int(i) for i in obj["eye_contour_left"]),
            eye_contour_right=tuple(int(i) for i in obj["eye_contour_right"]),
            forehead_top=int(obj["forehead_top"]),
            midline_indices=tuple(int(i) for i in obj["midline_indices"]),
            hairline_fallback_factor=float(obj.get("hairline_fallback_factor", 1.10)),
        )
    except KeyError as e:
        raise ValueError(f"semantics config missing key {e}")


def load_semantics(path) -> SemanticsConfig:
    """Load a semantics config from JSON or TOML, by file extension."""
    p = Path(path)
    if p.suffix.lower() == ".toml":
        with open(p, "rb") as f:
            obj = tomllib.load(f)
    else:
        with open(p, "r", encoding="utf-8") as f:
            obj = json.load(f)
    return semantics_from_obj(obj)
