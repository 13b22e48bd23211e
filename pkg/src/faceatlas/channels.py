"""Meridian channel registry and flow polylines.

Channels group acupoints for rendering: points on the same channel are
connected in flow order. The registry is a CSV separate from the atlas so
flows can be reordered without touching coordinates; channels present in the
atlas but absent from the file get a default flow (ascending point index)
and a palette color.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from . import expr as ex
from .atlas import AtlasProgram
from .errors import AtlasParseError, BadHeader, RowError, UnknownPoint
from .evaluator import EvaluatedAtlas, EvaluatedPoint, Side

CHANNEL_HEADER = ["Code", "DisplayName", "Flow", "ColorHint"]

_COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")
_CODE_RE = re.compile(r"^[A-Z]{1,4}$")

# fallback palette for channels the file does not style
_DEFAULT_PALETTE = (
    "#e4572e", "#17bebb", "#ffc914", "#76b041", "#9b5de5",
    "#f15bb5", "#00bbf9", "#fb8b24", "#2ec4b6", "#b56576",
)


@dataclass(frozen=True)
class ChannelSpec:
    code: str
    display_name: str
    flow: tuple  # ordered PointId
    color_hint: tuple[int, int, int]

    @property
    def color_css(self) -> str:
        return "#{:02x}{:02x}{:02x}".format(*self.color_hint)


def parse_channels(text: str) -> list[ChannelSpec]:
    """Parse the channel registry CSV. Diagnostics are batched like the atlas."""
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = [(reader.line_num, row) for row in reader]
    rows = [(line, row) for line, row in rows if any(f.strip() for f in row)]
    if not rows:
        raise BadHeader(missing=list(CHANNEL_HEADER), extra=[])
    _, header = rows[0]
    header = [h.strip() for h in header]
    if header != CHANNEL_HEADER:
        missing = [c for c in CHANNEL_HEADER if c not in header]
        extra = [c for c in header if c not in CHANNEL_HEADER]
        raise BadHeader(missing=missing, extra=extra)

    specs: list[ChannelSpec] = []
    errors: list[RowError] = []
    seen: set[str] = set()
    for line, row in rows[1:]:
        if len(row) != len(CHANNEL_HEADER):
            errors.append(RowError(line, f"expected {len(CHANNEL_HEADER)} fields, got {len(row)}"))
            continue
        code, name, flow_text, color = (f.strip() for f in row)
        if not _CODE_RE.match(code):
            errors.append(RowError(line, f"bad channel code {code!r}"))
            continue
        if code in seen:
            errors.append(RowError(line, f"duplicate channel {code}"))
            continue
        if not _COLOR_RE.match(color):
            errors.append(RowError(line, f"ColorHint must be #RRGGBB, got {color!r}"))
            continue
        try:
            flow = _parse_flow(code, flow_text)
        except ValueError as e:
            errors.append(RowError(line, str(e)))
            continue
        seen.add(code)
        rgb = tuple(int(color[i : i + 2], 16) for i in (1, 3, 5))
        specs.append(ChannelSpec(code=code, display_name=name, flow=flow, color_hint=rgb))
    if errors:
        raise AtlasParseError(errors)
    return specs


def _parse_flow(code: str, text: str) -> tuple:
    flow = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        pid = ex.PointId.parse(part)
        if pid in flow:
            raise ValueError(f"flow repeats {pid}")
        flow.append(pid)
    return tuple(flow)


@dataclass(frozen=True)
class ChannelRegistry:
    """Channel specs bound to a program: every flow entry verified, and
    channels missing from the file filled in with defaults."""

    channels: tuple  # ChannelSpec, atlas file order

    def get(self, code: str):
        for spec in self.channels:
            if spec.code == code:
                return spec
        return None

    def codes(self) -> list[str]:
        return [s.code for s in self.channels]


def bind_channels(specs: list[ChannelSpec], program: AtlasProgram) -> ChannelRegistry:
    """Check flows against the program and derive defaults for unstyled channels."""
    by_code = {s.code: s for s in specs}
    for spec in specs:
        for pid in spec.flow:
            if pid not in program.points:
                raise UnknownPoint(spec.code, str(pid))

    bound: list[ChannelSpec] = []
    for i, code in enumerate(program.channels):
        spec = by_code.get(code)
        if spec is None:
            members = sorted(
                (pid for pid in program.points if pid.channel == code),
                key=lambda p: p.index,
            )
            color = _DEFAULT_PALETTE[i % len(_DEFAULT_PALETTE)]
            rgb = tuple(int(color[j : j + 2], 16) for j in (1, 3, 5))
            spec = ChannelSpec(code=code, display_name=code, flow=tuple(members), color_hint=rgb)
        bound.append(spec)
    return ChannelRegistry(channels=tuple(bound))


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelSelection:
    point_ids: tuple  # PointId, program file order
    unknown: tuple    # channel codes not present in the program


def select_channels(codes, program: AtlasProgram) -> ChannelSelection:
    """Restrict a program to the given channels. An empty selection means all;
    unknown codes are reported as diagnostics, never fatal."""
    wanted = {c for c in codes}
    unknown = tuple(sorted(wanted - set(program.channels)))
    ordered = sorted(program.points, key=lambda p: program.points[p].file_index)
    if not wanted:
        return ChannelSelection(point_ids=tuple(ordered), unknown=unknown)
    ids = tuple(p for p in ordered if p.channel in wanted)
    return ChannelSelection(point_ids=ids, unknown=unknown)


# ---------------------------------------------------------------------------
# Polylines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polyline:
    channel: str
    side: Side
    points_px: tuple  # ((x, y), ...)

    def as_dict(self) -> dict:
        return {
            "channel": self.channel,
            "side": self.side.value,
            "px": [[x, y] for x, y in self.points_px],
        }


def channel_polylines(spec: ChannelSpec, atlas: EvaluatedAtlas) -> list[Polyline]:
    """Connect a channel's evaluated points in flow order.

    Channels containing any symmetric point produce one chain per side, with
    center points participating in both; all-center channels produce a
    single chain. A flow entry missing from this result splits the chain.
    """
    if atlas.degenerate:
        raise ValueError("cannot build polylines for a degenerate result")
    present: dict[tuple, EvaluatedPoint] = {(p.id, p.side): p for p in atlas.points}

    has_sides = any((pid, Side.LEFT) in present or (pid, Side.RIGHT) in present for pid in spec.flow)
    sides = (Side.LEFT, Side.RIGHT) if has_sides else (Side.CENTER,)

    polylines: list[Polyline] = []
    for side in sides:
        chain: list[tuple[float, float]] = []
        for pid in spec.flow:
            p = present.get((pid, side)) or present.get((pid, Side.CENTER))
            if p is None:
                if chain:
                    polylines.append(Polyline(spec.code, side, tuple(chain)))
                    chain = []
                continue
            chain.append(p.position_px)
        if chain:
            polylines.append(Polyline(spec.code, side, tuple(chain)))
    return polylines
