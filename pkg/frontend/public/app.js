// --- types.js ---
/** Wire-format types for the training telemetry and command channel. */
function isTelemetryFrame(x) {
    if (typeof x !== "object" || x === null)
        return false;
    const f = x;
    return (typeof f.step === "number" &&
        typeof f.episode === "number" &&
        Array.isArray(f.ee_pos) &&
        f.ee_pos.length === 3);
}

// --- charts.js ---
/** Strip-chart series with bucketed min/max downsampling.
 *
 * A series keeps a bounded history; rendering reduces it so that no more
 * than two points (the bucket's min and max) are emitted per output pixel,
 * which preserves spikes that plain decimation would drop.
 */
class Series {
    maxPoints;
    points = [];
    constructor(maxPoints = 20000) {
        this.maxPoints = maxPoints;
    }
    get length() {
        return this.points.length;
    }
    push(x, y) {
        if (!Number.isFinite(x) || !Number.isFinite(y))
            return;
        const last = this.points[this.points.length - 1];
        if (last && x < last.x)
            return; // x must be non-decreasing
        this.points.push({ x, y });
        if (this.points.length > this.maxPoints) {
            this.points.splice(0, this.points.length - this.maxPoints);
        }
    }
    raw() {
        return this.points;
    }
    /** At most 2 points per pixel column: per-bucket min and max, in x order. */
    downsample(widthPx) {
        return downsample(this.points, widthPx);
    }
}
function downsample(points, widthPx) {
    if (widthPx <= 0)
        return [];
    if (points.length <= 2 * widthPx)
        return [...points];
    const x0 = points[0].x;
    const x1 = points[points.length - 1].x;
    const span = x1 - x0;
    if (span <= 0)
        return [points[0], points[points.length - 1]];
    const out = [];
    let bucket = [];
    let bucketIdx = 0;
    const flush = () => {
        if (bucket.length === 0)
            return;
        let lo = bucket[0];
        let hi = bucket[0];
        for (const p of bucket) {
            if (p.y < lo.y)
                lo = p;
            if (p.y > hi.y)
                hi = p;
        }
        if (lo === hi) {
            out.push(lo);
        }
        else {
            out.push(lo.x <= hi.x ? lo : hi, lo.x <= hi.x ? hi : lo);
        }
        bucket = [];
    };
    for (const p of points) {
        const idx = Math.min(widthPx - 1, Math.floor(((p.x - x0) / span) * widthPx));
        if (idx !== bucketIdx) {
            flush();
            bucketIdx = idx;
        }
        bucket.push(p);
    }
    flush();
    return out;
}
/** Map data coordinates to canvas pixels for a simple line plot. */
function toPixels(pts, width, height, pad = 2) {
    if (pts.length === 0)
        return [];
    let xMin = Infinity;
    let xMax = -Infinity;
    let yMin = Infinity;
    let yMax = -Infinity;
    for (const p of pts) {
        xMin = Math.min(xMin, p.x);
        xMax = Math.max(xMax, p.x);
        yMin = Math.min(yMin, p.y);
        yMax = Math.max(yMax, p.y);
    }
    const xSpan = xMax - xMin || 1;
    const ySpan = yMax - yMin || 1;
    const w = width - 2 * pad;
    const h = height - 2 * pad;
    return pts.map((p) => ({
        x: pad + ((p.x - xMin) / xSpan) * w,
        y: pad + h - ((p.y - yMin) / ySpan) * h,
    }));
}

// --- scene.js ---
const WORKSPACE = 0.5;
/** World x/y (meters, [-WORKSPACE, WORKSPACE]) to canvas pixels. */
function worldToPixel(wx, wy, width, height) {
    const s = Math.min(width, height);
    return {
        x: width / 2 + (wx / WORKSPACE) * (s / 2) * 0.9,
        y: height / 2 - (wy / WORKSPACE) * (s / 2) * 0.9,
    };
}
/** Marker radius in px from height above the table. */
function heightToRadius(z) {
    return 4 + Math.max(0, Math.min(0.4, z)) * 20;
}
function drawScene(ctx, frame, width, height) {
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

// --- teleop.js ---
const MOVE = {
    ArrowUp: [0, 1, 0],
    ArrowDown: [0, -1, 0],
    ArrowLeft: [-1, 0, 0],
    ArrowRight: [1, 0, 0],
    PageUp: [0, 0, 1],
    PageDown: [0, 0, -1],
    w: [0, 0, 1],
    s: [0, 0, -1],
};
class Teleop {
    send;
    stepFraction;
    /** true once the server telemetry confirms our takeover */
    acknowledged = false;
    requested = false;
    gripperClosed = false;
    constructor(send, stepFraction = 1.0) {
        this.send = send;
        this.stepFraction = stepFraction;
    }
    get takeoverRequested() {
        return this.requested;
    }
    get gripperCommand() {
        return this.gripperClosed ? 1.0 : 0.0;
    }
    /** Feed the remote_takeover flag from each telemetry frame. */
    observeTakeover(remoteTakeover) {
        this.acknowledged = this.requested && remoteTakeover;
        if (!remoteTakeover && !this.requested)
            this.acknowledged = false;
    }
    /** Returns true when the key was consumed. */
    handleKey(key) {
        switch (key) {
            case "t":
                this.requested = true;
                this.send({ kind: "takeover" });
                return true;
            case "r":
                this.requested = false;
                this.acknowledged = false;
                this.gripperClosed = false;
                this.send({ kind: "release" });
                return true;
            case "m":
                this.send({ kind: "mark_success" });
                return true;
            case "x":
                this.send({ kind: "abort_episode" });
                return true;
        }
        if (key === " ") {
            if (!this.acknowledged)
                return false;
            this.gripperClosed = !this.gripperClosed;
            this.send({ kind: "action", delta: [0, 0, 0], gripper: this.gripperCommand });
            return true;
        }
        const dir = MOVE[key];
        if (dir) {
            if (!this.acknowledged)
                return false; // gate on server ack
            const f = this.stepFraction;
            this.send({
                kind: "action",
                delta: [dir[0] * f, dir[1] * f, dir[2] * f],
                gripper: this.gripperCommand,
            });
            return true;
        }
        return false;
    }
}

// --- wsclient.js ---
/** Reconnecting telemetry stream with a latest-frame buffer.
 *
 * The socket constructor is injectable so tests can drive the client with a
 * fake transport. Reconnects use exponential backoff with a cap; a successful
 * connection resets the backoff.
 */

class TelemetryClient {
    opts;
    socket = null;
    attempts = 0;
    stopped = false;
    /** most recent frame; stale reads are fine, renderers poll this */
    latest = null;
    framesReceived = 0;
    state = "closed";
    constructor(options) {
        this.opts = { baseBackoffMs: 250, maxBackoffMs: 8000, ...options };
    }
    /** Current reconnect delay: base * 2^(attempts-1), capped. */
    backoffMs() {
        const { baseBackoffMs, maxBackoffMs } = this.opts;
        const exp = baseBackoffMs * Math.pow(2, Math.max(0, this.attempts - 1));
        return Math.min(exp, maxBackoffMs);
    }
    connect() {
        if (this.stopped)
            return;
        this.setState("connecting");
        const sock = this.opts.makeSocket(this.opts.url);
        this.socket = sock;
        sock.onopen = () => {
            this.attempts = 0;
            this.setState("open");
        };
        sock.onmessage = (ev) => {
            let parsed;
            try {
                parsed = JSON.parse(ev.data);
            }
            catch {
                return; // drop malformed frames
            }
            if (!isTelemetryFrame(parsed))
                return;
            // ignore out-of-order frames
            if (this.latest && parsed.step < this.latest.step)
                return;
            this.latest = parsed;
            this.framesReceived += 1;
            this.opts.onFrame?.(parsed);
        };
        sock.onclose = () => this.handleDown();
        sock.onerror = () => this.handleDown();
    }
    handleDown() {
        if (this.socket === null)
            return;
        this.socket = null;
        this.setState("closed");
        if (this.stopped)
            return;
        this.attempts += 1;
        const schedule = this.opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
        schedule(() => this.connect(), this.backoffMs());
    }
    stop() {
        this.stopped = true;
        const sock = this.socket;
        this.socket = null;
        sock?.close();
        this.setState("closed");
    }
    setState(s) {
        if (s !== this.state) {
            this.state = s;
            this.opts.onState?.(s);
        }
    }
}

// --- main.js ---
/** Dashboard wiring: telemetry socket -> scene + strip charts, keyboard -> commands. */




function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
async function sendCommand(cmd) {
    const res = await fetch("/command", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(cmd),
    });
    const body = await res.json();
    if (!body.accepted) {
        el("notice").textContent = `rejected: ${body.reason}`;
    }
}
function drawStrip(canvas, series, color) {
    const ctx = canvas.getContext("2d");
    if (!ctx)
        return;
    const { width, height } = canvas;
    ctx.clearRect(0, 0, width, height);
    const pts = toPixels(series.downsample(width), width, height);
    if (pts.length < 2)
        return;
    ctx.beginPath();
    ctx.strokeStyle = color;
    ctx.lineWidth = 1;
    ctx.moveTo(pts[0].x, pts[0].y);
    for (const p of pts.slice(1))
        ctx.lineTo(p.x, p.y);
    ctx.stroke();
}
function browserSocket(url) {
    const ws = new WebSocket(url);
    const like = {
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
function start() {
    const scene = el("scene");
    const rewardChart = el("chart-reward");
    const successChart = el("chart-success");
    const interventionChart = el("chart-intervention");
    const status = el("status");
    const notice = el("notice");
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
        onFrame: (frame) => {
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
        if (teleop.handleKey(ev.key))
            ev.preventDefault();
    });
    const render = () => {
        const frame = client.latest;
        if (frame) {
            drawScene(scene.getContext("2d"), frame, scene.width, scene.height);
            el("readout").textContent =
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

