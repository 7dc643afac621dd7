import { describe, expect, it } from "vitest";
import { SocketLike, TelemetryClient } from "../src/wsclient.js";
import { TelemetryFrame } from "../src/types.js";

class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;
  close(): void {
    this.closed = true;
  }
}

function frame(step: number, extra: Partial<TelemetryFrame> = {}): string {
  return JSON.stringify({
    step,
    episode: 0,
    ee_pos: [0, 0, 0.2],
    object_pos: [0.1, 0, 0.02],
    gripper: 0,
    held: false,
    stage_gt: 0,
    stages: [],
    progress: 1,
    similarity: 0.5,
    reward: -0.05,
    demo_buffer: 100,
    online_buffer: 10,
    success_rate: 0,
    intervention_rate: 0,
    takeover: false,
    paused: false,
    remote_takeover: false,
    ...extra,
  });
}

function harness() {
  const sockets: FakeSocket[] = [];
  const timers: { fn: () => void; ms: number }[] = [];
  const frames: TelemetryFrame[] = [];
  const states: string[] = [];
  const client = new TelemetryClient({
    url: "ws://test/ws",
    makeSocket: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    schedule: (fn, ms) => timers.push({ fn, ms }),
    onFrame: (f) => frames.push(f),
    onState: (s) => states.push(s),
  });
  return { client, sockets, timers, frames, states };
}

describe("TelemetryClient", () => {
  it("buffers the latest frame and counts arrivals", () => {
    const h = harness();
    h.client.connect();
    const s = h.sockets[0];
    s.onopen!();
    s.onmessage!({ data: frame(1) });
    s.onmessage!({ data: frame(2) });
    expect(h.client.latest!.step).toBe(2);
    expect(h.client.framesReceived).toBe(2);
    expect(h.frames.map((f) => f.step)).toEqual([1, 2]);
  });

  it("drops malformed and out-of-order messages", () => {
    const h = harness();
    h.client.connect();
    const s = h.sockets[0];
    s.onopen!();
    s.onmessage!({ data: "{not json" });
    s.onmessage!({ data: JSON.stringify({ hello: 1 }) });
    s.onmessage!({ data: frame(5) });
    s.onmessage!({ data: frame(3) }); // stale
    expect(h.client.framesReceived).toBe(1);
    expect(h.client.latest!.step).toBe(5);
  });

  it("reconnects with exponential backoff and caps the delay", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onclose!();
    expect(h.timers[0].ms).toBe(250);
    h.timers[0].fn(); // reconnect attempt 2
    h.sockets[1].onclose!();
    expect(h.timers[1].ms).toBe(500);
    // drive many failures; delay must cap at 8000
    for (let i = 2; i < 12; i++) {
      h.timers[i - 1].fn();
      h.sockets[i].onclose!();
    }
    expect(h.timers[h.timers.length - 1].ms).toBe(8000);
  });

  it("resets backoff after a successful connection", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onclose!();
    h.timers[0].fn();
    h.sockets[1].onclose!();
    h.timers[1].fn();
    h.sockets[2].onopen!(); // success resets attempts
    h.sockets[2].onclose!();
    expect(h.timers[2].ms).toBe(250);
  });

  it("reports connection state transitions", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onopen!();
    h.sockets[0].onclose!();
    expect(h.states).toEqual(["connecting", "open", "closed"]);
  });

  it("stop() closes the socket and suppresses reconnects", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onopen!();
    h.client.stop();
    expect(h.sockets[0].closed).toBe(true);
    expect(h.timers.length).toBe(0);
    h.client.connect(); // no-op once stopped
    expect(h.sockets.length).toBe(1);
  });

  it("does not double-reconnect when close and error both fire", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onerror!();
    h.sockets[0].onclose!();
    expect(h.timers.length).toBe(1);
  });
});
