/** Reconnecting telemetry stream with a latest-frame buffer.
 *
 * The socket constructor is injectable so tests can drive the client with a
 * fake transport. Reconnects use exponential backoff with a cap; a successful
 * connection resets the backoff.
 */
import { TelemetryFrame, isTelemetryFrame } from "./types.js";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionState = "connecting" | "open" | "closed";

export interface TelemetryClientOptions {
  url: string;
  makeSocket: SocketFactory;
  /** schedule(fn, ms) — injectable timer, defaults to setTimeout */
  schedule?: (fn: () => void, ms: number) => void;
  baseBackoffMs?: number;
  maxBackoffMs?: number;
  onFrame?: (frame: TelemetryFrame) => void;
  onState?: (state: ConnectionState) => void;
}

export class TelemetryClient {
  private opts: Required<Pick<TelemetryClientOptions, "baseBackoffMs" | "maxBackoffMs">> &
    TelemetryClientOptions;
  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  /** most recent frame; stale reads are fine, renderers poll this */
  latest: TelemetryFrame | null = null;
  framesReceived = 0;
  state: ConnectionState = "closed";

  constructor(options: TelemetryClientOptions) {
    this.opts = { baseBackoffMs: 250, maxBackoffMs: 8000, ...options };
  }

  /** Current reconnect delay: base * 2^(attempts-1), capped. */
  backoffMs(): number {
    const { baseBackoffMs, maxBackoffMs } = this.opts;
    const exp = baseBackoffMs * Math.pow(2, Math.max(0, this.attempts - 1));
    return Math.min(exp, maxBackoffMs);
  }

  connect(): void {
    if (this.stopped) return;
    this.setState("connecting");
    const sock = this.opts.makeSocket(this.opts.url);
    this.socket = sock;
    sock.onopen = () => {
      this.attempts = 0;
      this.setState("open");
    };
    sock.onmessage = (ev) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(ev.data);
      } catch {
        return; // drop malformed frames
      }
      if (!isTelemetryFrame(parsed)) return;
      // ignore out-of-order frames
      if (this.latest && parsed.step < this.latest.step) return;
      this.latest = parsed;
      this.framesReceived += 1;
      this.opts.onFrame?.(parsed);
    };
    sock.onclose = () => this.handleDown();
    sock.onerror = () => this.handleDown();
  }

  private handleDown(): void {
    if (this.socket === null) return;
    this.socket = null;
    this.setState("closed");
    if (this.stopped) return;
    this.attempts += 1;
    const schedule = this.opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    schedule(() => this.connect(), this.backoffMs());
  }

  stop(): void {
    this.stopped = true;
    const sock = this.socket;
    this.socket = null;
    sock?.close();
    this.setState("closed");
  }

  private setState(s: ConnectionState): void {
    if (s !== this.state) {
      this.state = s;
      this.opts.onState?.(s);
    }
  }
}
