import { describe, expect, it } from "vitest";
import { WORKSPACE, drawScene, heightToRadius, worldToPixel } from "../src/scene.js";
import { TelemetryFrame } from "../src/types.js";

describe("worldToPixel", () => {
  it("centers the origin", () => {
    expect(worldToPixel(0, 0, 400, 400)).toEqual({ x: 200, y: 200 });
  });

  it("maps +x right and +y up within the margin", () => {
    const p = worldToPixel(WORKSPACE, WORKSPACE, 400, 400);
    expect(p.x).toBeCloseTo(380);
    expect(p.y).toBeCloseTo(20);
  });

  it("uses the smaller dimension on non-square canvases", () => {
    const p = worldToPixel(WORKSPACE, 0, 800, 400);
    expect(p.x).toBeCloseTo(400 + 180);
  });
});

describe("heightToRadius", () => {
  it("grows with height and clamps", () => {
    expect(heightToRadius(0)).toBe(4);
    expect(heightToRadius(0.2)).toBeGreaterThan(heightToRadius(0.05));
    expect(heightToRadius(99)).toBe(heightToRadius(0.4));
    expect(heightToRadius(-1)).toBe(4);
  });
});

function stubCtx() {
  const calls: string[] = [];
  return {
    calls,
    fillStyle: "" as string,
    strokeStyle: "" as string,
    lineWidth: 0,
    font: "",
    clearRect: () => calls.push("clearRect"),
    beginPath: () => calls.push("beginPath"),
    arc: () => calls.push("arc"),
    fill: () => calls.push("fill"),
    stroke: () => calls.push("stroke"),
    fillText: () => calls.push("fillText"),
    setLineDash: () => calls.push("setLineDash"),
  };
}

function sampleFrame(): TelemetryFrame {
  return {
    step: 1,
    episode: 0,
    ee_pos: [0, 0, 0.2],
    object_pos: [0.18, 0.06, 0.02],
    gripper: 0,
    held: false,
    stage_gt: 0,
    stages: [
      { name: "approach", center: [0.18, 0.06, 0.1], radius: 0.04 },
      { name: "grasp", center: [0.18, 0.06, 0.03], radius: 0.02 },
    ],
    progress: 1,
    similarity: 0.4,
    reward: -0.05,
    demo_buffer: 100,
    online_buffer: 50,
    success_rate: 0,
    intervention_rate: 0.1,
    takeover: false,
    paused: false,
    remote_takeover: false,
  };
}

describe("drawScene", () => {
  it("clears and draws stage rings, object, and end effector", () => {
    const ctx = stubCtx();
    drawScene(ctx, sampleFrame(), 400, 400);
    expect(ctx.calls[0]).toBe("clearRect");
    const strokes = ctx.calls.filter((c) => c === "stroke").length;
    const fills = ctx.calls.filter((c) => c === "fill").length;
    expect(strokes).toBe(3); // two stage rings + gripper ring
    expect(fills).toBe(2); // object + end effector
    expect(ctx.calls.filter((c) => c === "fillText").length).toBe(2);
  });
});
