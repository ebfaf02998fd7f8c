import { describe, expect, it } from "vitest";

import { ReconnectPolicy } from "../src/backoff.js";

describe("ReconnectPolicy", () => {
  it("doubles from 0.5 s and caps at 10 s", () => {
    const p = new ReconnectPolicy();
    const delays = Array.from({ length: 8 }, () => p.nextDelayMs());
    expect(delays).toEqual([500, 1000, 2000, 4000, 8000, 10_000, 10_000, 10_000]);
  });

  it("reset starts the schedule over", () => {
    const p = new ReconnectPolicy();
    p.nextDelayMs();
    p.nextDelayMs();
    p.reset();
    expect(p.nextDelayMs()).toBe(500);
  });
});
