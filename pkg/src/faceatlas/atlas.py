"""Atlas data files: parsing, semantic validation, and compilation.

An atlas is a CSV with one acupoint (or reference point) per row. The
compiler resolves inter-point references into a dependency graph, orders it
topologically, and classifies every point by how many proportional steps its
position takes: mesh-anchored points are cheap and stable, cun-derived ones
less so, and chains of cun-derived points least of all.
"""

from __future__ import annotations

import csv
import io
import json
import heapq
from dataclasses import dataclass
from enum import Enum

from . import expr as ex
from .errors import (
    AtlasParseError,
    BadHeader,
    CycleError,
    DimensionError,
    RowError,
    SideAccessError,
    UndefinedReference,
)

ATLAS_HEADER = ["Channel", "ID", "NameE", "Region", "FaceMeshX", "FaceMeshY", "IsSymmetry", "Comments"]

REFERENCE_CHANNEL = "RHD"


class Complexity(str, Enum):
    DIRECT = "direct"
    ONE_TIME = "one_time"
    MULTI_TIME = "multi_time"


@dataclass(frozen=True)
class AcupointDef:
    id: ex.PointId
    name_en: str
    region: str
    expr_x: ex.PositionExpr
    expr_y: ex.PositionExpr
    is_symmetric: bool
    comments: str = ""


# ---------------------------------------------------------------------------
# CSV parsing
# ---------------------------------------------------------------------------

def parse_atlas(text: str) -> list[AcupointDef]:
    """Parse an atlas CSV into definitions.

    Diagnostics are batched: every bad row is reported in one
    AtlasParseError rather than failing on the first. A bad or missing
    header raises BadHeader immediately since field positions are unknown.
    """
    try:
        reader = csv.reader(io.StringIO(text, newline=""))
        rows = [(reader.line_num, row) for row in reader]
    except csv.Error as e:
        raise AtlasParseError([RowError(0, f"csv error: {e}")])

    rows = [(line, row) for line, row in rows if any(field.strip() for field in row)]
    if not rows:
        raise BadHeader(missing=list(ATLAS_HEADER), extra=[])
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if header != ATLAS_HEADER:
        missing = [c for c in ATLAS_HEADER if c not in header]
        extra = [c for c in header if c not in ATLAS_HEADER]
        if missing or extra:
            raise BadHeader(missing=missing, extra=extra)
        raise BadHeader(missing=[], extra=[f"columns out of order: {','.join(header)}"])

    defs: list[AcupointDef] = []
    errors: list[RowError] = []
    seen: dict[ex.PointId, int] = {}
    for line, row in rows[1:]:
        try:
            d = _parse_row(row)
        except _RowFailure as f:
            errors.append(RowError(line, f.cause))
            continue
        if d.id in seen:
            errors.append(RowError(line, f"duplicate identifier {d.id} (first on line {seen[d.id]})"))
            continue
        seen[d.id] = line
        defs.append(d)
    if errors:
        raise AtlasParseError(errors)
    return defs


class _RowFailure(Exception):
    def __init__(self, cause: str):
        self.cause = cause


def _parse_row(row: list[str]) -> AcupointDef:
    if len(row) != len(ATLAS_HEADER):
        raise _RowFailure(f"expected {len(ATLAS_HEADER)} fields, got {len(row)}")
    channel, id_text, name, region, fx, fy, sym, comments = (f.strip() for f in row)
    try:
        pid = ex.PointId.parse(channel + id_text)
    except ValueError as e:
        raise _RowFailure(str(e))
    if not name:
        raise _RowFailure("NameE must not be empty")
    try:
        expr_x = ex.parse_expression(fx)
    except ex.ExpressionSyntaxError as e:  # type: ignore[attr-defined]
        raise _RowFailure(f"FaceMeshX: {e}")
    except Exception as e:
        raise _RowFailure(f"FaceMeshX: {e}")
    try:
        expr_y = ex.parse_expression(fy)
    except Exception as e:
        raise _RowFailure(f"FaceMeshY: {e}")
    sym_l = sym.lower()
    if sym_l not in ("true", "false"):
        raise _RowFailure(f"IsSymmetry must be TRUE or FALSE, got {sym!r}")
    return AcupointDef(
        id=pid,
        name_en=name,
        region=region,
        expr_x=expr_x,
        expr_y=expr_y,
        is_symmetric=(sym_l == "true"),
        comments="" if comments == "-" else comments,
    )


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompiledPoint:
    definition: AcupointDef
    file_index: int
    complexity: Complexity
    point_refs: tuple[ex.PointId, ...]
    uses_cun: bool
    uses_hairline: bool


@dataclass(frozen=True, eq=False)
class AtlasProgram:
    """Compiled atlas. Identity-hashed so evaluators can cache per-program
    derived state; value-level comparison goes through to_canonical_json."""

    points: dict  # PointId -> CompiledPoint
    order: tuple  # PointId evaluation order (topological, file order on ties)
    channels: tuple  # channel codes in file order

    def definition(self, pid: ex.PointId) -> AcupointDef:
        return self.points[pid].definition

    def complexity(self, pid: ex.PointId) -> Complexity:
        return self.points[pid].complexity

    def point_count(self) -> int:
        """Number of generated point instances (symmetric rows count twice)."""
        return sum(2 if cp.definition.is_symmetric else 1 for cp in self.points.values())

    def to_canonical_json(self) -> str:
        """Deterministic dump: compiling the same file twice must match byte for byte."""
        doc = {
            "channels": list(self.channels),
            "order": [str(p) for p in self.order],
            "points": {
                str(pid): {
                    "name": cp.definition.name_en,
                    "region": cp.definition.region,
                    "x": ex.serialize(cp.definition.expr_x),
                    "y": ex.serialize(cp.definition.expr_y),
                    "symmetric": cp.definition.is_symmetric,
                    "comments": cp.definition.comments,
                    "complexity": cp.complexity.value,
                    "file_index": cp.file_index,
                }
                for pid, cp in self.points.items()
            },
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _collect_refs(d: AcupointDef):
    point_refs: list[ex.PointRef] = []
    mesh_refs: list[ex.MeshRef] = []
    hairline = False
    for e in (d.expr_x, d.expr_y):
        for r in ex.iter_refs(e):
            if isinstance(r, ex.PointRef):
                point_refs.append(r)
            elif isinstance(r, ex.MeshRef):
                mesh_refs.append(r)
            else:
                hairline = True
    return point_refs, mesh_refs, hairline


def compile_atlas(defs: list[AcupointDef]) -> AtlasProgram:
    """Validate definitions and produce an executable program.

    Checks reference existence, side-qualifier rules, mesh index bounds, and
    dimensional sanity of every expression; orders points topologically with
    file order breaking ties; classifies each point's localization
    complexity.
    """
    by_id = {d.id: d for d in defs}
    file_index = {d.id: i for i, d in enumerate(defs)}

    deps: dict[ex.PointId, list[ex.PointId]] = {}
    meta: dict[ex.PointId, tuple] = {}
    for d in defs:
        point_refs, mesh_refs, hairline = _collect_refs(d)
        for r in mesh_refs:
            if not 0 <= r.index < ex.MESH_VERTEX_COUNT:
                raise UndefinedReference(d.id, f"mesh vertex {r}")
        for r in point_refs:
            target = by_id.get(r.point)
            if target is None:
                raise UndefinedReference(d.id, str(r.point))
            if target.is_symmetric and r.side is None and not d.is_symmetric:
                raise SideAccessError(
                    f"{d.id} references symmetric point {r.point} without a .L/.R qualifier"
                )
            if not target.is_symmetric and r.side is not None:
                raise SideAccessError(
                    f"{d.id} qualifies non-symmetric point {r.point} with .{r.side.value}"
                )
        for e, col in ((d.expr_x, "FaceMeshX"), (d.expr_y, "FaceMeshY")):
            try:
                ex.expression_kind(e)
            except DimensionError as err:
                raise DimensionError(f"{d.id} {col}: {err}")
        deps[d.id] = sorted({r.point for r in point_refs}, key=lambda p: file_index[p])
        meta[d.id] = (tuple(deps[d.id]), hairline)

    order = _topological_order(deps, file_index)

    uses_cun_map = {d.id: (ex.uses_cun(d.expr_x) or ex.uses_cun(d.expr_y)) for d in defs}
    complexity: dict[ex.PointId, Complexity] = {}
    for pid in order:
        refs, hairline = meta[pid]
        cun = uses_cun_map[pid]
        if not refs and not cun and not hairline:
            complexity[pid] = Complexity.DIRECT
        elif all(complexity[r] is Complexity.DIRECT for r in refs):
            complexity[pid] = Complexity.ONE_TIME
        else:
            complexity[pid] = Complexity.MULTI_TIME

    channels: list[str] = []
    for d in defs:
        if d.id.channel not in channels:
            channels.append(d.id.channel)

    points = {
        d.id: CompiledPoint(
            definition=d,
            file_index=file_index[d.id],
            complexity=complexity[d.id],
            point_refs=meta[d.id][0],
            uses_cun=uses_cun_map[d.id],
            uses_hairline=meta[d.id][1],
        )
        for d in defs
    }
    return AtlasProgram(points=points, order=tuple(order), channels=tuple(channels))


def _topological_order(deps, file_index) -> list[ex.PointId]:
    """Kahn's algorithm over the reference graph (dependencies first),
    deterministic: among ready points, file order wins."""
    dependents: dict[ex.PointId, list[ex.PointId]] = {p: [] for p in deps}
    remaining = {p: len(rs) for p, rs in deps.items()}
    for p, rs in deps.items():
        for r in rs:
            dependents[r].append(p)
    ready = [(file_index[p], p) for p, n in remaining.items() if n == 0]
    heapq.heapify(ready)
    order: list[ex.PointId] = []
    while ready:
        _, p = heapq.heappop(ready)
        order.append(p)
        for q in dependents[p]:
            remaining[q] -= 1
            if remaining[q] == 0:
                heapq.heappush(ready, (file_index[q], q))
    if len(order) < len(deps):
        raise CycleError(_find_cycle(deps, {p for p in deps if remaining[p] > 0}))
    return order


def _find_cycle(deps, candidates) -> list[ex.PointId]:
    start = min(candidates, key=str)
    path, seen = [], {}
    node = start
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = next(r for r in deps[node] if r in candidates)
    cycle = path[seen[node]:] + [node]
    return cycle


# ---------------------------------------------------------------------------
# Census
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Census:
    """Point-instance counts by group and complexity class. Symmetric rows
    produce a left/right pair and count as two instances."""

    reference: dict
    acupoint: dict

    def total(self) -> int:
        return sum(self.reference.values()) + sum(self.acupoint.values())

    def as_dict(self) -> dict:
        return {
            "reference": dict(self.reference),
            "acupoint": dict(self.acupoint),
            "totals": {
                "reference": sum(self.reference.values()),
                "acupoint": sum(self.acupoint.values()),
            },
        }


def census(program: AtlasProgram) -> Census:
    counts = {
        "reference": {c.value: 0 for c in Complexity},
        "acupoint": {c.value: 0 for c in Complexity},
    }
    for pid, cp in program.points.items():
        group = "reference" if pid.channel == REFERENCE_CHANNEL else "acupoint"
        counts[group][cp.complexity.value] += 2 if cp.definition.is_symmetric else 1
    return Census(reference=counts["reference"], acupoint=counts["acupoint"])


def format_census_table(c: Census) -> str:
    """Fixed-width table of the census, one row per group."""
    head = f"{'Quantity':<18}{'Direct':>8}{'One-time':>10}{'Multi-time':>12}"
    rows = [head]
    for label, data in (("Reference points", c.reference), ("Acupoints", c.acupoint)):
        rows.append(
            f"{label:<18}{data[Complexity.DIRECT.value]:>8}"
            f"{data[Complexity.ONE_TIME.value]:>10}"
            f"{data[Complexity.MULTI_TIME.value]:>12}"
        )
    return "\n".join(rows)
