/** Wire schema shared with the websocket bridge.
 *
 * Outbound from the bridge: hello (once, on connect), telemetry (<= 30 Hz,
 * newest-wins decimated), end (replay exhausted). Inbound: joystick axis
 * commands, clamped to [-1, 1] before they leave the page. Anything that
 * does not parse cleanly is dropped — a garbage frame must never wedge the
 * session.
 */

export interface Hello {
  type: "hello";
  scenario_id: string;
  /** sampling period of the underlying run, seconds */
  ts: number;
}

export interface Telemetry {
  type: "telemetry";
  /** run time, seconds — charts use this, never client wall time */
  t: number;
  /** measured plant output */
  y: number;
  /** filtered reference */
  y_star: number;
  /** commanded control */
  u: number;
  /** 0 none, 1 measurement lost, 2 control lost */
  fault: 0 | 1 | 2;
}

export interface End {
  type: "end";
}

export type ServerMessage = Hello | Telemetry | End;

const isNum = (x: unknown): x is number => typeof x === "number" && Number.isFinite(x);

export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const m = obj as Record<string, unknown>;
  switch (m.type) {
    case "hello":
      if (typeof m.scenario_id === "string" && isNum(m.ts) && m.ts > 0) {
        return { type: "hello", scenario_id: m.scenario_id, ts: m.ts };
      }
      return null;
    case "telemetry":
      if (
        isNum(m.t) &&
        isNum(m.y) &&
        isNum(m.y_star) &&
        isNum(m.u) &&
        (m.fault === 0 || m.fault === 1 || m.fault === 2)
      ) {
        return { type: "telemetry", t: m.t, y: m.y, y_star: m.y_star, u: m.u, fault: m.fault };
      }
      return null;
    case "end":
      return { type: "end" };
    default:
      return null;
  }
}

export const clampAxis = (axis: number): number =>
  Number.isFinite(axis) ? Math.min(1, Math.max(-1, axis)) : 0;

/** Serialize one joystick command; the only message the page ever sends. */
export function joystickFrame(axis: number, tClientS: number): string {
  return JSON.stringify({ type: "joystick", axis: clampAxis(axis), t_client: tClientS });
}
