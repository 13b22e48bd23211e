"""Evaluate a compiled atlas against one landmark frame.

Pipeline per frame: align, extract the hairline, assemble reference anchors,
compute the unit cun, then walk the program in dependency order. Symmetric
rows are evaluated once on the canonical (right, i.e. larger aligned x) side
and mirrored across the midline for the left instance. All expression math
happens in aligned space; results are mapped back through the inverse
transform into normalized and pixel coordinates of the source frame.

Two expression paths exist: ``evaluate_expression`` is the readable
recursive interpreter, and the per-frame loop uses code generated from the
same validated ASTs (one lambda per expression, cached per program) to hit
real-time budgets. A property test pins both to identical semantics.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import expr as ex
from .atlas import AtlasProgram
from .errors import DegenerateFace
from .geometry import (
    AlignedFrame,
    Confidence,
    CunUnit,
    LandmarkFrame,
    ReferencePoints,
    SemanticsConfig,
    align_frame,
    extract_hairline,
    extract_reference_points,
    unit_cun,
)

Side = ex.Side


@dataclass
class EvalEnvironment:
    """Everything an expression can read: the aligned mesh, the hairline
    point, the unit cun, and the table of already-evaluated points."""

    aligned: AlignedFrame
    refs: ReferencePoints
    cun: CunUnit
    hairline: np.ndarray
    hairline_confidence: Confidence
    table: dict = field(default_factory=dict)  # (PointId, Side) -> np.ndarray
    confidence: dict = field(default_factory=dict)  # PointId -> Confidence

    def insert(self, pid: ex.PointId, side: Side, position) -> None:
        key = (pid, side)
        assert key not in self.table, f"point {pid} side {side} evaluated twice"
        self.table[key] = np.asarray(position, dtype=float)

    def lookup(self, pid: ex.PointId, side: Side) -> np.ndarray:
        key = (pid, side)
        assert key in self.table, f"point {pid} side {side} read before evaluation"
        return self.table[key]


@dataclass(frozen=True)
class EvaluatedPoint:
    id: ex.PointId
    side: Side
    position_px: tuple[float, float]
    position_norm: tuple[float, float]
    confidence: Confidence
    channel: str
    name_en: str

    def as_dict(self) -> dict:
        return {
            "id": str(self.id),
            "side": self.side.value,
            "name": self.name_en,
            "channel": self.channel,
            "px": [self.position_px[0], self.position_px[1]],
            "norm": [self.position_norm[0], self.position_norm[1]],
            "conf": self.confidence.value,
        }


@dataclass(frozen=True)
class EvaluatedAtlas:
    timestamp: int
    points: tuple
    uc: Optional[float]
    degenerate: bool = False

    def point(self, pid: ex.PointId, side: Side) -> EvaluatedPoint:
        for p in self.points:
            if p.id == pid and p.side == side:
                return p
        raise KeyError(f"{pid} side {side.value} not in result")

    def as_dict(self) -> dict:
        return {
            "ts": self.timestamp,
            "uc": self.uc,
            "degenerate": self.degenerate,
            "points": [p.as_dict() for p in self.points],
        }


# ---------------------------------------------------------------------------
# Reference interpreter
# ---------------------------------------------------------------------------

def _resolve_side(target_symmetric: bool, explicit: Optional[Side], current: Side) -> Side:
    if explicit is not None:
        return explicit
    if not target_symmetric:
        return Side.CENTER
    # unqualified symmetric reference inside a symmetric definition:
    # bind to the side being evaluated
    return current


def evaluate_expression(
    e: ex.PositionExpr,
    axis: ex.Axis,
    env: EvalEnvironment,
    side: Side,
    program: Optional[AtlasProgram] = None,
) -> float:
    """Evaluate one expression to an aligned-space scalar.

    ``axis`` names the component being produced and is used only for
    diagnostics; Coord nodes carry their own axis.
    """
    if isinstance(e, ex.Num):
        return e.value
    if isinstance(e, ex.Cun):
        return env.cun.uc
    if isinstance(e, ex.Coord):
        p = _resolve_ref(e.ref, env, side, program)
        return float(p[0] if e.axis is ex.Axis.X else p[1])
    if isinstance(e, ex.Neg):
        return -evaluate_expression(e.operand, axis, env, side, program)
    if isinstance(e, ex.Add):
        return evaluate_expression(e.left, axis, env, side, program) + evaluate_expression(
            e.right, axis, env, side, program
        )
    if isinstance(e, ex.Sub):
        return evaluate_expression(e.left, axis, env, side, program) - evaluate_expression(
            e.right, axis, env, side, program
        )
    if isinstance(e, ex.Mul):
        return evaluate_expression(e.left, axis, env, side, program) * evaluate_expression(
            e.right, axis, env, side, program
        )
    raise TypeError(f"not an expression node: {e!r}")


def _resolve_ref(
    ref: ex.Ref, env: EvalEnvironment, side: Side, program: Optional[AtlasProgram]
) -> np.ndarray:
    if isinstance(ref, ex.MeshRef):
        return env.aligned.vertices[ref.index, :2]
    if isinstance(ref, ex.HairlineRef):
        return env.hairline
    target_symmetric = False
    if program is not None and ref.point in program.points:
        target_symmetric = program.points[ref.point].definition.is_symmetric
    return env.lookup(ref.point, _resolve_side(target_symmetric, ref.side, side))


# ---------------------------------------------------------------------------
# Compiled per-program fast path
# ---------------------------------------------------------------------------
#
# Slot layout: every definition owns one canonical slot (center, or the
# right instance); symmetric definitions own a second slot for the mirrored
# left instance. Expressions become lambdas over the flat slot arrays, the
# aligned mesh coordinate lists, the unit cun, and the hairline point. All
# references were validated at compile time, so the generated source only
# ever contains literals, indexing, and arithmetic.

_ARGS = "xs, ys, vx, vy, uc, hx, hy"


def _emit(e: ex.PositionExpr, slot_of, canonical_side: Side) -> str:
    if isinstance(e, ex.Num):
        return repr(e.value)
    if isinstance(e, ex.Cun):
        return "uc"
    if isinstance(e, ex.Coord):
        arr = "x" if e.axis is ex.Axis.X else "y"
        r = e.ref
        if isinstance(r, ex.MeshRef):
            return f"v{arr}[{r.index}]"
        if isinstance(r, ex.HairlineRef):
            return f"h{arr}"
        slot = slot_of(r.point, r.side, canonical_side)
        return f"{arr}s[{slot}]"
    if isinstance(e, ex.Neg):
        return f"(-{_emit(e.operand, slot_of, canonical_side)})"
    if isinstance(e, (ex.Add, ex.Sub, ex.Mul)):
        op = {ex.Add: "+", ex.Sub: "-", ex.Mul: "*"}[type(e)]
        left = _emit(e.left, slot_of, canonical_side)
        right = _emit(e.right, slot_of, canonical_side)
        return f"({left}{op}{right})"
    raise TypeError(f"not an expression node: {e!r}")


@dataclass(frozen=True)
class _FastDef:
    pid: ex.PointId
    name: str
    channel: str
    symmetric: bool
    slot: int                 # canonical instance
    left_slot: int            # mirrored instance, -1 for center points
    fn_x: object
    fn_y: object
    uses_cun: bool
    uses_hairline: bool
    ref_indices: tuple        # definition indices this one reads


class _FastProgram:
    def __init__(self, program: AtlasProgram):
        order = program.order
        def_index = {pid: i for i, pid in enumerate(order)}

        slots: dict[tuple, int] = {}
        next_slot = 0
        for pid in order:
            symmetric = program.points[pid].definition.is_symmetric
            canonical = Side.RIGHT if symmetric else Side.CENTER
            slots[(pid, canonical)] = next_slot
            next_slot += 1
            if symmetric:
                slots[(pid, Side.LEFT)] = next_slot
                next_slot += 1
        self.slot_count = next_slot

        def slot_of(target: ex.PointId, explicit: Optional[Side], current: Side) -> int:
            target_symmetric = program.points[target].definition.is_symmetric
            side = _resolve_side(target_symmetric, explicit, current)
            return slots[(target, side)]

        self.defs: list[_FastDef] = []
        for pid in order:
            cp = program.points[pid]
            d = cp.definition
            canonical = Side.RIGHT if d.is_symmetric else Side.CENTER
            src_x = _emit(d.expr_x, slot_of, canonical)
            src_y = _emit(d.expr_y, slot_of, canonical)
            fn_x = eval(compile(f"lambda {_ARGS}: {src_x}", f"<atlas:{pid}:x>", "eval"))
            fn_y = eval(compile(f"lambda {_ARGS}: {src_y}", f"<atlas:{pid}:y>", "eval"))
            self.defs.append(
                _FastDef(
                    pid=pid,
                    name=d.name_en,
                    channel=pid.channel,
                    symmetric=d.is_symmetric,
                    slot=slots[(pid, canonical)],
                    left_slot=slots.get((pid, Side.LEFT), -1),
                    fn_x=fn_x,
                    fn_y=fn_y,
                    uses_cun=cp.uses_cun,
                    uses_hairline=cp.uses_hairline,
                    ref_indices=tuple(def_index[r] for r in cp.point_refs),
                )
            )


_fast_cache: "weakref.WeakKeyDictionary[AtlasProgram, _FastProgram]" = weakref.WeakKeyDictionary()


def _fast_program(program: AtlasProgram) -> _FastProgram:
    fast = _fast_cache.get(program)
    if fast is None:
        fast = _FastProgram(program)
        _fast_cache[program] = fast
    return fast


# ---------------------------------------------------------------------------
# Whole-atlas evaluation
# ---------------------------------------------------------------------------

def evaluate_atlas(
    program: AtlasProgram, frame: LandmarkFrame, cfg: SemanticsConfig
) -> EvaluatedAtlas:
    """Evaluate every definition of the program against one frame.

    A degenerate face (coincident anchors, vanishing reference distance)
    yields an explicit empty result instead of an error so a live stream can
    skip bad frames without tearing the session down.
    """
    try:
        aligned = align_frame(frame, cfg)
        hairline, hair_conf = extract_hairline(frame, aligned, cfg)
        refs = extract_reference_points(aligned, hairline, hair_conf, cfg)
        cun = unit_cun(refs)
    except DegenerateFace:
        return EvaluatedAtlas(timestamp=frame.timestamp, points=(), uc=None, degenerate=True)

    fast = _fast_program(program)
    vx = aligned.vertices[:, 0].tolist()
    vy = aligned.vertices[:, 1].tolist()
    uc = cun.uc
    hx, hy = float(hairline[0]), float(hairline[1])
    mid2 = 2.0 * aligned.midline_x

    xs = [0.0] * fast.slot_count
    ys = [0.0] * fast.slot_count
    hair_estimated = hair_conf is Confidence.ESTIMATED
    estimated = [False] * len(fast.defs)

    for i, fd in enumerate(fast.defs):
        x = fd.fn_x(xs, ys, vx, vy, uc, hx, hy)
        y = fd.fn_y(xs, ys, vx, vy, uc, hx, hy)
        xs[fd.slot] = x
        ys[fd.slot] = y
        if fd.symmetric:
            xs[fd.left_slot] = mid2 - x
            ys[fd.left_slot] = y
        if hair_estimated and (
            fd.uses_cun
            or fd.uses_hairline
            or any(estimated[r] for r in fd.ref_indices)
        ):
            estimated[i] = True

    # one batched map back to image space
    keys: list[tuple[_FastDef, Side, int]] = []
    for fd in fast.defs:
        if fd.symmetric:
            keys.append((fd, Side.RIGHT, fd.slot))
            keys.append((fd, Side.LEFT, fd.left_slot))
        else:
            keys.append((fd, Side.CENTER, fd.slot))
    if not keys:
        return EvaluatedAtlas(timestamp=frame.timestamp, points=(), uc=uc, degenerate=False)
    aligned_pts = np.array([[xs[s], ys[s]] for _, _, s in keys])
    norm = aligned.to_norm(aligned_pts)
    px = norm * np.array([float(frame.width), float(frame.height)])

    conf_of = {fd.pid: (Confidence.ESTIMATED if est else Confidence.MEASURED)
               for fd, est in zip(fast.defs, estimated)}
    points = tuple(
        EvaluatedPoint(
            id=fd.pid,
            side=side,
            position_px=(float(px[k, 0]), float(px[k, 1])),
            position_norm=(float(norm[k, 0]), float(norm[k, 1])),
            confidence=conf_of[fd.pid],
            channel=fd.channel,
            name_en=fd.name,
        )
        for k, (fd, side, _) in enumerate(keys)
    )
    return EvaluatedAtlas(timestamp=frame.timestamp, points=points, uc=uc, degenerate=False)
