import { ReconnectPolicy } from "./backoff.js";
import { joystickFrame, parseServerMessage } from "./protocol.js";
import type { SessionStore } from "./store.js";

export type Status =
  | { kind: "connecting" }
  | { kind: "live" }
  | { kind: "retrying"; delayMs: number }
  | { kind: "closed" };

/** Minimal constructor surface so tests can inject a fake socket. */
export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  readyState: number;
  send(data: string): void;
  close(): void;
}
export type WebSocketCtor = new (url: string) => WebSocketLike;

const OPEN = 1;

/** Owns the single websocket: feeds the store, reconnects with backoff,
 * and is the only path through which the page talks back (joystick only).
 */
export class BridgeClient {
  private ws: WebSocketLike | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;
  private readonly policy = new ReconnectPolicy();

  constructor(
    private readonly url: string,
    private readonly store: SessionStore,
    private readonly onStatus: (s: Status) => void,
    private readonly WS: WebSocketCtor,
  ) {}

  connect(): void {
    this.stopped = false;
    this.onStatus({ kind: "connecting" });
    const ws = new this.WS(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.policy.reset();
      this.onStatus({ kind: "live" });
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      const msg = parseServerMessage(ev.data);
      if (msg) this.store.handle(msg);
    };
    ws.onclose = () => {
      if (ws !== this.ws) return; // superseded by a newer connect
      this.ws = null;
      if (this.stopped) return;
      const delayMs = this.policy.nextDelayMs();
      this.onStatus({ kind: "retrying", delayMs });
      this.timer = setTimeout(() => this.connect(), delayMs);
    };
  }

  sendAxis(axis: number, tClientS: number): void {
    if (this.ws && this.ws.readyState === OPEN) {
      this.ws.send(joystickFrame(axis, tClientS));
    }
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.ws?.close();
    this.ws = null;
    this.onStatus({ kind: "closed" });
  }
}
