/** Dashboard wiring: telemetry socket -> scene + strip charts, keyboard -> commands. */
import { Series, toPixels } from "./charts.js";
import { drawScene } from "./scene.js";
import { Teleop } from "./teleop.js";
import { Command, TelemetryFrame } from "./types.js";
import { SocketLike, TelemetryClient } from "./wsclient.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function sendCommand(cmd: Command): Promise<void> {
  const res = await fetch("/command", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(cmd),
  });
  const body = await res.json();
  if (!body.accepted) {
    el<HTMLElement>("notice").textContent = `rejected: ${body.reason}`;
  }
}

function drawStrip(canvas: HTMLCanvasElement, series: Series, color: string): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const pts = toPixels(series.downsample(width), width, height);
  if (pts.length < 2) return;
  ctx.beginPath();
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.moveTo(pts[0].x, pts[0].y);
  for (const p of pts.slice(1)) ctx.lineTo(p.x, p.y);
  ctx.stroke();
}

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    onopen: null,
    onmessage: null,
    onclose: null,
    onerror: null,
    close: () => ws.close(),
  };
  ws.onopen = () => like.onopen?.();
  ws.onmessage = (ev) => like.onmessage?.({ data: String(ev.data) });
  ws.onclose = () => like.onclose?.();
  ws.onerror = () => like.onerror?.();
  return like;
}

export function start(): void {
  const scene = el<HTMLCanvasElement>("scene");
  const rewardChart = el<HTMLCanvasElement>("chart-reward");
  const successChart = el<HTMLCanvasElement>("chart-success");
  const interventionChart = el<HTMLCanvasElement>("chart-intervention");
  const status = el<HTMLElement>("status");
  const notice = el<HTMLElement>("notice");

  const reward = new Series();
  const success = new Series();
  const intervention = new Series();
  const teleop = new Teleop(sendCommand);

  const proto = location.protocol === "https:" ? "wss" : "ws";
  const client = new TelemetryClient({
    url: `${proto}://${location.host}/ws`,
    makeSocket: browserSocket,
    onState: (s) => {
      status.textContent = `connection: ${s}`;
    },
    onFrame: (frame: TelemetryFrame) => {
      teleop.observeTakeover(frame.remote_takeover);
      reward.push(frame.step, frame.reward);
      success.push(frame.step, frame.success_rate);
      intervention.push(frame.step, frame.intervention_rate);
      if (frame.notices?.length) {
        notice.textContent = frame.notices[frame.notices.length - 1];
      }
    },
  });
  client.connect();

  document.addEventListener("keydown", (ev) => {
    if (teleop.handleKey(ev.key)) ev.preventDefault();
  });

  const render = () => {
    const frame = client.latest;
    if (frame) {
      drawScene(scene.getContext("2d") as CanvasRenderingContext2D, frame,
        scene.width, scene.height);
      el<HTMLElement>("readout").textContent =
        `step ${frame.step} ep ${frame.episode} M=${frame.progress} ` +
        `sim=${frame.similarity.toFixed(3)} ` +
        `buffers d=${frame.demo_buffer} o=${frame.online_buffer} ` +
        `${frame.paused ? "PAUSED " : ""}` +
        `${frame.remote_takeover ? "TAKEOVER" : ""}`;
      drawStrip(rewardChart, reward, "#4b8bd4");
      drawStrip(successChart, success, "#7bd47b");
      drawStrip(interventionChart, intervention, "#e8b23c");
    }
    requestAnimationFrame(render);
  };
  requestAnimationFrame(render);
}

if (typeof document !== "undefined" && document.getElementById("scene")) {
  start();
}
