import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { BridgeClient, type Status, type WebSocketLike } from "../src/client.js";
import { SessionStore } from "../src/store.js";

class FakeSocket implements WebSocketLike {
  static instances: FakeSocket[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  readyState = 0;
  sent: string[] = [];

  constructor(readonly url: string) {
    FakeSocket.instances.push(this);
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.readyState = 3;
    this.onclose?.();
  }

  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  push(data: string): void {
    this.onmessage?.({ data });
  }
}

function makeClient(store = new SessionStore()) {
  const statuses: Status[] = [];
  const client = new BridgeClient("ws://x:1", store, (s) => statuses.push(s), FakeSocket);
  return { client, store, statuses };
}

beforeEach(() => {
  FakeSocket.instances = [];
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("BridgeClient", () => {
  it("feeds parsed frames to the store and ignores garbage", () => {
    const { client, store } = makeClient();
    client.connect();
    const ws = FakeSocket.instances[0]!;
    ws.open();
    ws.push('{"type":"hello","scenario_id":"joy-5","ts":0.01}');
    ws.push("jibberish{{{");
    ws.push('{"type":"telemetry","t":1,"y":2,"y_star":3,"u":4,"fault":0}');
    expect(store.hello?.scenario_id).toBe("joy-5");
    expect(store.framesSeen).toBe(1);
  });

  it("reconnects with growing delays and resets after a good connect", () => {
    const { client, statuses } = makeClient();
    client.connect();
    FakeSocket.instances[0]!.close();
    expect(statuses.at(-1)).toEqual({ kind: "retrying", delayMs: 500 });
    vi.advanceTimersByTime(500);
    expect(FakeSocket.instances.length).toBe(2);

    FakeSocket.instances[1]!.close();
    expect(statuses.at(-1)).toEqual({ kind: "retrying", delayMs: 1000 });
    vi.advanceTimersByTime(1000);

    const third = FakeSocket.instances[2]!;
    third.open(); // success resets the schedule
    third.close();
    expect(statuses.at(-1)).toEqual({ kind: "retrying", delayMs: 500 });
  });

  it("close() stops the retry loop", () => {
    const { client } = makeClient();
    client.connect();
    FakeSocket.instances[0]!.close();
    client.close();
    vi.advanceTimersByTime(60_000);
    expect(FakeSocket.instances.length).toBe(1);
  });

  it("sends clamped joystick frames only while open", () => {
    const { client } = makeClient();
    client.connect();
    const ws = FakeSocket.instances[0]!;
    client.sendAxis(0.5, 1.0); // not open yet
    expect(ws.sent).toEqual([]);
    ws.open();
    client.sendAxis(4.2, 2.0);
    expect(JSON.parse(ws.sent[0]!)).toEqual({ type: "joystick", axis: 1, t_client: 2.0 });
  });
});
