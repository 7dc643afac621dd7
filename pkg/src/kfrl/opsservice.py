"""Telemetry and human-intervention gateway.

Streams live training state over a websocket (throttled to at most 20 Hz per
client) and routes operator commands — takeover, corrective actions, success
verification, abort, pause — into the training loop through the same
intervention-source interface the scripted oracle uses.
"""
from __future__ import annotations

import asyncio
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import labsim
from .core import RunConfig
from .rl import TrainControl

STALE_TAKEOVER_S = 2.0
PUBLISH_INTERVAL_S = 0.05   # 20 Hz ceiling per client

COMMAND_KINDS = (
    "takeover", "release", "action", "mark_success",
    "abort_episode", "pause", "resume",
)


class RemoteIntervention:
    """Operator-driven intervention source.

    Implements the same ``poll(env) -> action | None`` interface as the
    scripted oracle. While takeover is active the most recent operator action
    is held and returned every step; a takeover that goes silent for more
    than ``STALE_TAKEOVER_S`` seconds auto-releases.
    """

    def __init__(self, clock=time.monotonic):
        self._lock = threading.Lock()
        self._clock = clock
        self._active = False
        self._action: np.ndarray | None = None
        self._last_message = 0.0
        self.notices: list[str] = []

    @property
    def active(self) -> bool:
        with self._lock:
            return self._active

    def takeover(self) -> None:
        with self._lock:
            self._active = True
            self._action = None
            self._last_message = self._clock()

    def release(self) -> None:
        with self._lock:
            self._active = False
            self._action = None

    def set_action(self, delta_xyz, gripper: float) -> str | None:
        """Store an operator action; fractions of the per-axis step limit.

        Returns an error string when takeover is not active.
        """
        delta = np.clip(np.asarray(delta_xyz, dtype=float), -1.0, 1.0)
        if delta.shape != (3,):
            return "action delta must have 3 components"
        with self._lock:
            if not self._active:
                return "takeover not active"
            self._action = np.concatenate(
                [delta * labsim.STEP_LIMIT, [float(np.clip(gripper, 0.0, 1.0))]])
            self._last_message = self._clock()
        return None

    def poll(self, env) -> np.ndarray | None:
        with self._lock:
            if not self._active:
                return None
            if self._clock() - self._last_message > STALE_TAKEOVER_S:
                self._active = False
                self._action = None
                self.notices.append("takeover auto-released: no operator action for 2 s")
                return None
            if self._action is None:
                # Take over immediately but hold pose until the first action.
                return np.array([0.0, 0.0, 0.0, float(env.state.gripper)])
            return self._action.copy()


@dataclass
class TrainSession:
    """Shared state between the training thread and the web service."""

    cfg: RunConfig
    reward_mode: str
    total_steps: int
    control: TrainControl = field(default_factory=TrainControl)
    remote: RemoteIntervention = field(default_factory=RemoteIntervention)
    latest_frame: dict | None = None
    frames_published: int = 0
    done: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def publish(self, frame: dict) -> None:
        """Telemetry callback handed to the training loop; never blocks."""
        frame = dict(frame)
        frame["remote_takeover"] = self.remote.active
        if self.remote.notices:
            frame["notices"] = list(self.remote.notices)
            self.remote.notices.clear()
        with self._lock:
            self.latest_frame = frame
            self.frames_published += 1

    def snapshot(self) -> dict | None:
        with self._lock:
            return self.latest_frame


def apply_command(session: TrainSession, cmd: dict) -> tuple[bool, str]:
    """Route one operator command; returns (accepted, reason)."""
    kind = cmd.get("kind")
    if kind not in COMMAND_KINDS:
        return False, f"unknown command kind: {kind!r}"
    if kind == "takeover":
        session.remote.takeover()
    elif kind == "release":
        session.remote.release()
    elif kind == "action":
        err = session.remote.set_action(
            cmd.get("delta", (0.0, 0.0, 0.0)), cmd.get("gripper", 0.0))
        if err:
            return False, err
    elif kind == "mark_success":
        session.control.request_mark_success()
    elif kind == "abort_episode":
        session.control.request_abort()
    elif kind == "pause":
        session.control.paused = True
    elif kind == "resume":
        session.control.paused = False
    return True, "ok"


def create_app(session: TrainSession, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="kfrl ops service")
    app.state.session = session

    @app.get("/status")
    def status():
        frame = session.snapshot()
        return {
            "task_id": session.cfg.task_id,
            "seed": session.cfg.seed,
            "reward_mode": session.reward_mode,
            "total_steps": session.total_steps,
            "step": frame["step"] if frame else 0,
            "episode": frame["episode"] if frame else 0,
            "paused": session.control.paused,
            "remote_takeover": session.remote.active,
            "done": session.done,
        }

    @app.post("/command")
    async def command(cmd: dict):
        ok, reason = apply_command(session, cmd)
        code = 200 if ok else 400
        return JSONResponse({"accepted": ok, "reason": reason}, status_code=code)

    @app.websocket("/ws")
    async def telemetry(ws: WebSocket):
        await ws.accept()
        last_step = -1
        try:
            while True:
                frame = session.snapshot()
                if frame is not None and frame["step"] > last_step:
                    last_step = frame["step"]
                    await ws.send_json(frame)
                if session.done:
                    break
                await asyncio.sleep(PUBLISH_INTERVAL_S)
        except WebSocketDisconnect:
            pass

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")
    return app


def start_training_thread(session: TrainSession, out_dir: str | Path | None = None,
                          use_remote: bool = True) -> threading.Thread:
    """Run the training loop on a worker thread wired to this session."""
    from .rl import run_training, write_report

    def work():
        try:
            report, learner = run_training(
                session.cfg, session.reward_mode, session.total_steps,
                intervention_source=session.remote if use_remote else None,
                telemetry=session.publish, control=session.control,
            )
            if out_dir is not None:
                write_report(out_dir, report, learner)
        finally:
            session.done = True

    thread = threading.Thread(target=work, daemon=True)
    thread.start()
    return thread


def serve(cfg: RunConfig, reward_mode: str, total_steps: int, port: int,
          out_dir: str | Path | None = None, static_dir: str | Path | None = None,
          use_remote: bool = True) -> None:
    import uvicorn

    session = TrainSession(cfg=cfg, reward_mode=reward_mode, total_steps=total_steps)
    start_training_thread(session, out_dir, use_remote)
    app = create_app(session, static_dir)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")
