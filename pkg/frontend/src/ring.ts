import type { Telemetry } from "./protocol.js";

/** Rolling time window of telemetry frames.
 *
 * Keeps only frames newer than `spanS` behind the latest frame's run time,
 * so memory stays bounded on arbitrarily long runs. Ordering and trimming
 * are by the bridge's `t`, never by arrival time.
 */
export class TelemetryWindow {
  private buf: Telemetry[] = [];

  constructor(readonly spanS: number) {
    if (!(spanS > 0)) throw new RangeError(`window span must be positive, got ${spanS}`);
  }

  push(frame: Telemetry): void {
    // replays can restart a stream; a time jump backwards clears the window
    const last = this.buf[this.buf.length - 1];
    if (last !== undefined && frame.t < last.t) this.buf = [];
    this.buf.push(frame);
    const cutoff = frame.t - this.spanS;
    let drop = 0;
    while (drop < this.buf.length - 1 && this.buf[drop]!.t < cutoff) drop++;
    if (drop > 0) this.buf = this.buf.slice(drop);
  }

  get frames(): readonly Telemetry[] {
    return this.buf;
  }

  get latest(): Telemetry | undefined {
    return this.buf[this.buf.length - 1];
  }

  get length(): number {
    return this.buf.length;
  }
}
