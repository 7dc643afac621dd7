/** Top-down workspace view rendered on a 2D canvas.
 *
 * The workspace is a square of half-extent WORKSPACE meters in x/y; z is
 * shown as marker size. Stage waypoints are drawn as circles with their
 * capture radii; the active stage is highlighted.
 */
import { TelemetryFrame } from "./types.js";

export const WORKSPACE = 0.5;

export interface Px {
  x: number;
  y: number;
}

/** World x/y (meters, [-WORKSPACE, WORKSPACE]) to canvas pixels. */
export function worldToPixel(
  wx: number,
  wy: number,
  width: number,
  height: number,
): Px {
  const s = Math.min(width, height);
  return {
    x: width / 2 + (wx / WORKSPACE) * (s / 2) * 0.9,
    y: height / 2 - (wy / WORKSPACE) * (s / 2) * 0.9,
  };
}

/** Marker radius in px from height above the table. */
export function heightToRadius(z: number): number {
  return 4 + Math.max(0, Math.min(0.4, z)) * 20;
}

type Ctx2D = Pick<
  CanvasRenderingContext2D,
  | "clearRect"
  | "beginPath"
  | "arc"
  | "fill"
  | "stroke"
  | "fillText"
  | "setLineDash"
> & {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
};

export function drawScene(
  ctx: Ctx2D,
  frame: TelemetryFrame,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const scale = Math.min(width, height) / (2 * WORKSPACE) * 0.9;

  frame.stages.forEach((stage, i) => {
    const p = worldToPixel(stage.center[0], stage.center[1], width, height);
    const active = i === frame.stage_gt;
    ctx.beginPath();
    ctx.setLineDash(active ? [] : [4, 4]);
    ctx.strokeStyle = active ? "#e8b23c" : "#555";
    ctx.lineWidth = active ? 2 : 1;
    ctx.arc(p.x, p.y, stage.radius * scale, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#888";
    ctx.font = "10px monospace";
    ctx.fillText(stage.name, p.x + 6, p.y - 6);
  });

  const obj = worldToPixel(frame.object_pos[0], frame.object_pos[1], width, height);
  ctx.beginPath();
  ctx.fillStyle = frame.held ? "#7bd47b" : "#4b8bd4";
  ctx.arc(obj.x, obj.y, heightToRadius(frame.object_pos[2]), 0, 2 * Math.PI);
  ctx.fill();

  const ee = worldToPixel(frame.ee_pos[0], frame.ee_pos[1], width, height);
  ctx.beginPath();
  ctx.fillStyle = frame.takeover ? "#e85c5c" : "#eee";
  ctx.arc(ee.x, ee.y, heightToRadius(frame.ee_pos[2]), 0, 2 * Math.PI);
  ctx.fill();
  ctx.beginPath();
  ctx.strokeStyle = frame.gripper > 0.5 ? "#7bd47b" : "#999";
  ctx.lineWidth = 2;
  ctx.arc(ee.x, ee.y, heightToRadius(frame.ee_pos[2]) + 3, 0, 2 * Math.PI);
  ctx.stroke();
}
