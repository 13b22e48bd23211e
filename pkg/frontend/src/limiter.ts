// Client-side soft limiter: skip sending a frame while too many previous
// sends are still unacknowledged. A timeout releases lost replies so one
// dropped packet cannot stall the stream forever.

export class SoftLimiter {
  private inFlight: number[] = []; // send times (ms)
  skipped = 0;

  constructor(
    private budget: number = 1,
    private timeoutMs: number = 1000
  ) {}

  private expire(nowMs: number): void {
    this.inFlight = this.inFlight.filter((t) => nowMs - t < this.timeoutMs);
  }

  /** True when the frame may be sent; records it as in flight. */
  trySend(nowMs: number): boolean {
    this.expire(nowMs);
    if (this.inFlight.length >= this.budget) {
      this.skipped++;
      return false;
    }
    this.inFlight.push(nowMs);
    return true;
  }

  /** An atlas or dropped reply settles one in-flight send. */
  onReply(nowMs: number): void {
    this.expire(nowMs);
    this.inFlight.shift();
  }

  get pending(): number {
    return this.inFlight.length;
  }
}
