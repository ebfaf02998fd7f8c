import type { Hello, ServerMessage, Telemetry } from "./protocol.js";
import { TelemetryWindow } from "./ring.js";

export type FaultCode = 0 | 1 | 2;

export const FAULT_LABELS: Record<FaultCode, string> = {
  0: "link ok",
  1: "measurement lost",
  2: "control lost",
};

/** Session state fed by parsed bridge messages; the render loop reads it. */
export class SessionStore {
  hello: Hello | null = null;
  readonly window: TelemetryWindow;
  ended = false;
  framesSeen = 0;

  constructor(spanS = 60) {
    this.window = new TelemetryWindow(spanS);
  }

  handle(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello":
        // a reconnect replays hello; restart the session cleanly
        this.hello = msg;
        this.ended = false;
        break;
      case "telemetry":
        this.window.push(msg);
        this.framesSeen++;
        break;
      case "end":
        this.ended = true;
        break;
    }
  }

  get lamp(): FaultCode {
    return (this.window.latest?.fault ?? 0) as FaultCode;
  }

  get latest(): Telemetry | undefined {
    return this.window.latest;
  }
}
