// Message types of the faceatlas service protocol (one JSON object per
// WebSocket message) and light runtime validation of server replies.

export interface ChannelInfo {
  code: string;
  display_name: string;
  color: string;
  flow: string[];
}

export interface PointInfo {
  id: string;
  name: string;
  region: string;
  channel: string;
  symmetric: boolean;
  complexity: string;
}

export interface ConfigMessage {
  type: "config";
  channels: ChannelInfo[];
  points: PointInfo[];
}

export interface AtlasPoint {
  id: string;
  side: "C" | "L" | "R";
  name: string;
  channel: string;
  px: [number, number];
  norm: [number, number];
  conf: "measured" | "estimated";
}

export interface AtlasPolyline {
  channel: string;
  side: string;
  px: [number, number][];
  color: string;
}

export interface AtlasMessage {
  type: "atlas";
  ts: number;
  uc: number | null;
  degenerate: boolean;
  points: AtlasPoint[];
  polylines: AtlasPolyline[];
}

export interface DroppedMessage {
  type: "dropped";
  ts: number;
}

export interface AckMessage {
  type: "ack";
  channels: string[];
  unknown: string[];
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage =
  | ConfigMessage
  | AtlasMessage
  | DroppedMessage
  | AckMessage
  | ErrorMessage;

export interface FrameVertex {
  0: number;
  1: number;
  2: number;
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const msg = obj as Record<string, unknown>;
  switch (msg.type) {
    case "config":
      return Array.isArray(msg.channels) && Array.isArray(msg.points)
        ? (msg as unknown as ConfigMessage)
        : null;
    case "atlas":
      return typeof msg.ts === "number" &&
        typeof msg.degenerate === "boolean" &&
        Array.isArray(msg.points)
        ? (msg as unknown as AtlasMessage)
        : null;
    case "dropped":
      return typeof msg.ts === "number" ? (msg as unknown as DroppedMessage) : null;
    case "ack":
      return Array.isArray(msg.channels) ? (msg as unknown as AckMessage) : null;
    case "error":
      return typeof msg.reason === "string" ? (msg as unknown as ErrorMessage) : null;
    default:
      return null;
  }
}

export function helloMessage(): string {
  return JSON.stringify({ type: "hello" });
}

export function selectMessage(channels: string[]): string {
  return JSON.stringify({ type: "select", channels });
}

export function frameMessage(
  ts: number,
  width: number,
  height: number,
  vertices: number[][],
  hairRle?: string
): string {
  const msg: Record<string, unknown> = { type: "frame", ts, w: width, h: height, v: vertices };
  if (hairRle !== undefined) msg.hair = hairRle;
  return JSON.stringify(msg);
}
