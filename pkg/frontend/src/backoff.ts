/** Reconnect delay schedule: 0.5 s doubling to a 10 s ceiling. */
export class ReconnectPolicy {
  static readonly BASE_MS = 500;
  static readonly CAP_MS = 10_000;

  private attempt = 0;

  nextDelayMs(): number {
    const delay = Math.min(ReconnectPolicy.BASE_MS * 2 ** this.attempt, ReconnectPolicy.CAP_MS);
    this.attempt++;
    return delay;
  }

  /** Call on a successful connect so the next outage starts over at 0.5 s. */
  reset(): void {
    this.attempt = 0;
  }
}
