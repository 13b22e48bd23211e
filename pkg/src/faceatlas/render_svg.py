"""SVG overlay output: evaluated points as circles, channel flows as paths,
labels as text. Vector output is viewable anywhere and diffs cleanly in CI."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .channels import ChannelRegistry, channel_polylines
from .evaluator import EvaluatedAtlas
from .geometry import Confidence

_POINT_RADIUS = 4.0
_STROKE = 2.0


def render_overlay_svg(
    atlas: EvaluatedAtlas,
    registry: ChannelRegistry,
    selected_ids=None,
    labels: bool = True,
) -> str:
    """Render one evaluated frame. ``selected_ids`` restricts output to those
    point ids (None means everything). Estimated points draw hollow."""
    if atlas.degenerate or not atlas.points:
        return (
            '<svg xmlns="http://www.w3.org/2000/svg" width="16" height="16">'
            "<desc>degenerate frame: no points</desc></svg>"
        )

    wanted = set(selected_ids) if selected_ids is not None else None
    points = [p for p in atlas.points if wanted is None or p.id in wanted]
    shown_ids = {p.id for p in points}

    # infer canvas size from any point's norm/px pair
    sample = atlas.points[0]
    width = round(sample.position_px[0] / sample.position_norm[0]) if sample.position_norm[0] else 512
    height = round(sample.position_px[1] / sample.position_norm[1]) if sample.position_norm[1] else 512

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]

    filtered = EvaluatedAtlas(
        timestamp=atlas.timestamp,
        points=tuple(points),
        uc=atlas.uc,
        degenerate=False,
    )
    for spec in registry.channels:
        flow_shown = [pid for pid in spec.flow if pid in shown_ids]
        if not flow_shown:
            continue
        for line in channel_polylines(spec, filtered):
            if len(line.points_px) < 2:
                continue
            d = "M " + " L ".join(f"{x:.2f} {y:.2f}" for x, y in line.points_px)
            parts.append(
                f'<path d="{d}" fill="none" stroke="{spec.color_css}" '
                f'stroke-width="{_STROKE}" opacity="0.8"/>'
            )

    for p in points:
        spec = next((s for s in registry.channels if s.code == p.channel), None)
        color = spec.color_css if spec else "#888888"
        x, y = p.position_px
        if p.confidence is Confidence.ESTIMATED:
            parts.append(
                f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{_POINT_RADIUS}" fill="none" '
                f'stroke="{color}" stroke-width="{_STROKE}"/>'
            )
        else:
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{_POINT_RADIUS}" fill="{color}"/>')
        if labels:
            parts.append(
                f'<text x="{x + 6:.2f}" y="{y - 6:.2f}" font-size="11" '
                f'font-family="sans-serif" fill="{color}">{escape(str(p.id))}'
                f"{'.' + p.side.value if p.side.value != 'C' else ''}</text>"
            )
    parts.append("</svg>")
    return "".join(parts)
