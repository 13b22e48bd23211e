// Overlay geometry: mapping normalized atlas coordinates onto the css-pixel
// canvas (with optional mirroring), channel filtering, and tap hit-testing.
// Pure functions here; canvas drawing lives at the bottom and stays thin.

import { AtlasMessage, AtlasPoint } from "./protocol.js";

export interface Viewport {
  cssWidth: number;
  cssHeight: number;
  mirrored: boolean;
}

export const TAP_RADIUS_CSS_PX = 24;

export function projectNorm(
  norm: [number, number] | { 0: number; 1: number },
  view: Viewport
): [number, number] {
  const nx = norm[0];
  const ny = norm[1];
  const x = view.mirrored ? (1 - nx) * view.cssWidth : nx * view.cssWidth;
  return [x, ny * view.cssHeight];
}

export function projectFramePx(
  px: [number, number],
  frame: { w: number; h: number },
  view: Viewport
): [number, number] {
  return projectNorm([px[0] / frame.w, px[1] / frame.h], view);
}

/** Restrict an atlas message to the selected channels; empty = all. */
export function filterAtlas(atlas: AtlasMessage, selected: string[]): AtlasMessage {
  if (selected.length === 0) return atlas;
  const wanted = new Set(selected);
  return {
    ...atlas,
    points: atlas.points.filter((p) => wanted.has(p.channel)),
    polylines: (atlas.polylines ?? []).filter((l) => wanted.has(l.channel)),
  };
}

/** Nearest point within the tap radius, in css pixels; null when none. */
export function hitTest(
  points: AtlasPoint[],
  cssX: number,
  cssY: number,
  view: Viewport,
  radius: number = TAP_RADIUS_CSS_PX
): AtlasPoint | null {
  let best: AtlasPoint | null = null;
  let bestDist = radius;
  for (const p of points) {
    const [x, y] = projectNorm(p.norm, view);
    const d = Math.hypot(x - cssX, y - cssY);
    if (d <= bestDist) {
      bestDist = d;
      best = p;
    }
  }
  return best;
}

export function tooltipText(point: AtlasPoint, region: string | undefined): string {
  return region ? `${point.name} (${region})` : point.name;
}

// ---------------------------------------------------------------------------
// Drawing
// ---------------------------------------------------------------------------

export interface DrawOptions {
  view: Viewport;
  frame: { w: number; h: number };
  colors: Map<string, string>; // channel code -> css color
  highlightId: string | null;
}

const POINT_RADIUS = 4;

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  atlas: AtlasMessage,
  opts: DrawOptions
): void {
  ctx.clearRect(0, 0, opts.view.cssWidth, opts.view.cssHeight);
  if (atlas.degenerate) return;

  for (const line of atlas.polylines ?? []) {
    if (line.px.length < 2) continue;
    ctx.beginPath();
    line.px.forEach((pt, i) => {
      const [x, y] = projectFramePx(pt, opts.frame, opts.view);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.strokeStyle = line.color ?? opts.colors.get(line.channel) ?? "#999";
    ctx.lineWidth = 2;
    ctx.globalAlpha = 0.8;
    ctx.stroke();
    ctx.globalAlpha = 1.0;
  }

  for (const p of atlas.points) {
    const [x, y] = projectNorm(p.norm, opts.view);
    const color = opts.colors.get(p.channel) ?? "#999";
    const highlighted = opts.highlightId === p.id;
    ctx.beginPath();
    ctx.arc(x, y, highlighted ? POINT_RADIUS + 3 : POINT_RADIUS, 0, Math.PI * 2);
    if (p.conf === "estimated") {
      // estimated points render hollow
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.stroke();
    } else {
      ctx.fillStyle = color;
      ctx.fill();
    }
    if (highlighted) {
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 1.5;
      ctx.stroke();
    }
  }
}
