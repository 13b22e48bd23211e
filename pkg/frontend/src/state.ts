// UI state and its transitions. Pure: every event returns a new state, so
// the render loop always works from one immutable snapshot.

import { AtlasMessage, ConfigMessage, ServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface UiState {
  connection: ConnectionStatus;
  config: ConfigMessage | null;
  selected: string[]; // channel codes; empty = all
  atlas: AtlasMessage | null; // latest non-stale atlas
  frameSize: { w: number; h: number } | null;
  mirrored: boolean;
  highlightId: string | null;
  noFace: boolean;
  fps: number; // EMA over atlas arrivals
  lastAtlasArrivalMs: number | null;
  droppedCount: number;
  sentCount: number;
  lastError: string | null;
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    config: null,
    selected: [],
    atlas: null,
    frameSize: null,
    mirrored: true,
    highlightId: null,
    noFace: false,
    fps: 0,
    lastAtlasArrivalMs: null,
    droppedCount: 0,
    sentCount: 0,
    lastError: null,
  };
}

const FPS_SMOOTHING = 0.2;

export function onServerMessage(state: UiState, msg: ServerMessage, nowMs: number): UiState {
  switch (msg.type) {
    case "config":
      return { ...state, config: msg };
    case "atlas": {
      // stale frames (older than what we already render) are discarded
      if (state.atlas !== null && msg.ts <= state.atlas.ts) return state;
      let fps = state.fps;
      if (state.lastAtlasArrivalMs !== null) {
        const dt = nowMs - state.lastAtlasArrivalMs;
        if (dt > 0) {
          const inst = 1000 / dt;
          fps = state.fps === 0 ? inst : state.fps * (1 - FPS_SMOOTHING) + inst * FPS_SMOOTHING;
        }
      }
      return { ...state, atlas: msg, fps, lastAtlasArrivalMs: nowMs };
    }
    case "dropped":
      return { ...state, droppedCount: state.droppedCount + 1 };
    case "ack":
      return state;
    case "error":
      return { ...state, lastError: msg.reason };
  }
}

export function onConnection(state: UiState, status: ConnectionStatus): UiState {
  return { ...state, connection: status };
}

/** Toggle one channel; the resulting list is what goes into a select message. */
export function toggleChannel(state: UiState, code: string): UiState {
  const selected = state.selected.includes(code)
    ? state.selected.filter((c) => c !== code)
    : [...state.selected, code];
  return { ...state, selected };
}

export function setMirrored(state: UiState, mirrored: boolean): UiState {
  return { ...state, mirrored };
}

export function onFrameSent(state: UiState, w: number, h: number): UiState {
  return { ...state, sentCount: state.sentCount + 1, frameSize: { w, h } };
}

export function onEstimator(state: UiState, faceFound: boolean): UiState {
  return { ...state, noFace: !faceFound };
}

export function setHighlight(state: UiState, id: string | null): UiState {
  return { ...state, highlightId: id };
}

/** Badges derived from the current snapshot. */
export function badges(state: UiState): string[] {
  const out: string[] = [];
  if (state.connection !== "open") out.push(state.connection);
  if (state.noFace) out.push("no face");
  if (state.atlas?.degenerate) out.push("degenerate frame");
  if (state.atlas && !state.atlas.degenerate) {
    if (state.atlas.points.some((p) => p.conf === "estimated")) out.push("hairline estimated");
  }
  return out;
}

export function dropRate(state: UiState): number {
  return state.sentCount === 0 ? 0 : state.droppedCount / state.sentCount;
}

export function regionOf(state: UiState, pointId: string): string | undefined {
  return state.config?.points.find((p) => p.id === pointId)?.region;
}
