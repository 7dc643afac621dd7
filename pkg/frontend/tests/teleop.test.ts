import { describe, expect, it } from "vitest";
import { Teleop } from "../src/teleop.js";
import { Command } from "../src/types.js";

function harness(stepFraction = 1.0) {
  const sent: Command[] = [];
  const teleop = new Teleop((c) => sent.push(c), stepFraction);
  return { teleop, sent };
}

describe("Teleop", () => {
  it("movement keys are ignored before takeover is acknowledged", () => {
    const { teleop, sent } = harness();
    expect(teleop.handleKey("ArrowUp")).toBe(false);
    teleop.handleKey("t"); // request takeover
    expect(teleop.handleKey("ArrowUp")).toBe(false); // requested but not acked
    expect(sent).toEqual([{ kind: "takeover" }]);
  });

  it("movement flows after the server acknowledges takeover", () => {
    const { teleop, sent } = harness(0.5);
    teleop.handleKey("t");
    teleop.observeTakeover(true);
    expect(teleop.handleKey("ArrowRight")).toBe(true);
    expect(sent[1]).toEqual({ kind: "action", delta: [0.5, 0, 0], gripper: 0 });
    teleop.handleKey("PageDown");
    expect(sent[2].delta).toEqual([0, 0, -0.5]);
  });

  it("server-side takeover without a local request is not an ack", () => {
    const { teleop } = harness();
    teleop.observeTakeover(true); // e.g. another operator
    expect(teleop.handleKey("ArrowUp")).toBe(false);
  });

  it("space toggles the gripper and is also gated", () => {
    const { teleop, sent } = harness();
    expect(teleop.handleKey(" ")).toBe(false);
    teleop.handleKey("t");
    teleop.observeTakeover(true);
    teleop.handleKey(" ");
    expect(sent[1]).toEqual({ kind: "action", delta: [0, 0, 0], gripper: 1 });
    teleop.handleKey("ArrowUp");
    expect(sent[2].gripper).toBe(1); // gripper state rides along
    teleop.handleKey(" ");
    expect(sent[3].gripper).toBe(0);
  });

  it("release drops the ack and resets the gripper", () => {
    const { teleop, sent } = harness();
    teleop.handleKey("t");
    teleop.observeTakeover(true);
    teleop.handleKey(" ");
    teleop.handleKey("r");
    expect(sent[sent.length - 1]).toEqual({ kind: "release" });
    expect(teleop.handleKey("ArrowUp")).toBe(false);
    expect(teleop.gripperCommand).toBe(0);
  });

  it("stale-takeover auto-release revokes the ack via telemetry", () => {
    const { teleop } = harness();
    teleop.handleKey("t");
    teleop.observeTakeover(true);
    expect(teleop.acknowledged).toBe(true);
    teleop.observeTakeover(false); // server auto-released
    expect(teleop.acknowledged).toBe(false);
    expect(teleop.handleKey("ArrowUp")).toBe(false);
  });

  it("episode verdict keys work without takeover", () => {
    const { teleop, sent } = harness();
    teleop.handleKey("m");
    teleop.handleKey("x");
    expect(sent).toEqual([{ kind: "mark_success" }, { kind: "abort_episode" }]);
  });

  it("unbound keys are not consumed", () => {
    const { teleop, sent } = harness();
    expect(teleop.handleKey("q")).toBe(false);
    expect(sent).toEqual([]);
  });
});
