// Wire types for the session service: newline-delimited JSON, one
// object per line (or per WebSocket text frame). Field names and units
// mirror the server exactly, all floats SI decimal.

export type Vec3 = [number, number, number];

export interface Envelope {
  max_field_t: number;
  max_gradient_tpm: number;
}

export interface GeometryInfo {
  kind: "tube" | "y_junction";
  diameter: number;
  main_length: number;
  branch_length: number;
  branch_angle: number;
}

export interface HelloMsg {
  kind: "hello";
  protocol: number;
  session: number;
  role: "controller" | "observer";
  mode: string;
  status: string;
  time_dilation: number;
  envelope: Envelope;
  geometry: GeometryInfo;
  capsule: { diameter: number; density: number };
  flow: { mean_velocity: number; profile: string };
}

export interface StateMsg {
  kind: "state";
  seq: number;
  t: number;
  position: Vec3;
  velocity: Vec3;
  region: string;
  dissolved_fraction: number;
  temperature_c: number;
  wall_contacts: number;
  status: string;
}

export interface CommandMsg {
  kind: "command";
  acked?: boolean;
  field_magnitude_t: number;
  field_direction: Vec3;
  gradient_tpm: Vec3;
  amf_on: boolean;
  rotation_hz: number;
}

export interface AdvanceModeMsg {
  kind: "advance_mode";
  mode: "running" | "paused";
  acked?: boolean;
}

export interface EndMsg {
  kind: "end";
  outcome: string;
  t: number;
  reason: string;
}

export type ServerMsg = HelloMsg | StateMsg | CommandMsg | AdvanceModeMsg | EndMsg;

const KINDS = new Set(["hello", "command", "advance_mode", "state", "end"]);

/** Parse one protocol line; null for anything malformed or unknown. */
export function parseMessage(line: string): ServerMsg | null {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null) return null;
  const kind = (value as { kind?: unknown }).kind;
  if (typeof kind !== "string" || !KINDS.has(kind)) return null;
  return value as ServerMsg;
}

export function encodeLine(message: object): string {
  return JSON.stringify(message) + "\n";
}

export function helloLine(role: "controller" | "observer"): string {
  return role === "observer"
    ? encodeLine({ kind: "hello", role: "observer" })
    : encodeLine({ kind: "hello" });
}

/** The operator's requested command, before the server clamps it. */
export interface CommandRequest {
  field_magnitude_t: number;
  field_direction: Vec3;
  gradient_tpm: Vec3;
  amf_on: boolean;
  rotation_hz: number;
}

export function commandLine(request: CommandRequest): string {
  return encodeLine({ kind: "command", ...request });
}

export function advanceModeLine(mode: "running" | "paused"): string {
  return encodeLine({ kind: "advance_mode", mode });
}

function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

/**
 * Pull a request inside the envelope. The widgets use this so nothing
 * outside the deliverable range is ever drawn, even before the server
 * ack arrives; the ack remains the displayed truth.
 */
export function clampRequest(request: CommandRequest, envelope: Envelope): CommandRequest {
  const field = Math.min(Math.max(request.field_magnitude_t, 0), envelope.max_field_t);
  let gradient = request.gradient_tpm;
  const g = norm(gradient);
  if (g > envelope.max_gradient_tpm) {
    const s = envelope.max_gradient_tpm / g;
    gradient = [gradient[0] * s, gradient[1] * s, gradient[2] * s];
  }
  return { ...request, field_magnitude_t: field, gradient_tpm: gradient };
}
