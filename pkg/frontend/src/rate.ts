/** Newest-wins outbound limiter.
 *
 * The joystick may update every pointer event (hundreds of Hz); the bridge
 * contract caps commands at `rateHz`. Values offered inside the minimum gap
 * overwrite each other and the freshest one goes out when `tick` is next
 * called with enough time elapsed — stale positions are never queued up.
 */
export class OutboundGate {
  private readonly minGapMs: number;
  private lastSentMs = -Infinity;
  private lastSentValue: number | null = null;
  private pending: number | null = null;

  constructor(
    rateHz: number,
    private readonly send: (value: number) => void,
  ) {
    if (!(rateHz > 0)) throw new RangeError(`rate must be positive, got ${rateHz}`);
    this.minGapMs = 1000 / rateHz;
  }

  /** Offer a new value; sends at once when the gap allows, else parks it. */
  offer(value: number, nowMs: number): void {
    if (value === this.lastSentValue && this.pending === null) return;
    this.pending = value;
    this.tick(nowMs);
  }

  /** Flush a parked value once the rate gap has passed; call every frame. */
  tick(nowMs: number): void {
    if (this.pending === null || nowMs - this.lastSentMs < this.minGapMs) return;
    const value = this.pending;
    this.pending = null;
    this.lastSentMs = nowMs;
    this.lastSentValue = value;
    this.send(value);
  }
}
