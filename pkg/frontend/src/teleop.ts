/** Keyboard teleoperation.
 *
 * Key presses only produce action commands after the server has acknowledged
 * a takeover (`remote_takeover` seen true in telemetry). Action deltas are
 * fractions of the robot's per-axis step limit.
 *
 * Bindings: arrows = x/y, PageUp/PageDown (or w/s) = z, space toggles the
 * gripper, t = takeover, r = release, m = mark success, x = abort episode.
 */
import { Command } from "./types.js";

export type CommandSender = (cmd: Command) => void;

const MOVE: Record<string, [number, number, number]> = {
  ArrowUp: [0, 1, 0],
  ArrowDown: [0, -1, 0],
  ArrowLeft: [-1, 0, 0],
  ArrowRight: [1, 0, 0],
  PageUp: [0, 0, 1],
  PageDown: [0, 0, -1],
  w: [0, 0, 1],
  s: [0, 0, -1],
};

export class Teleop {
  /** true once the server telemetry confirms our takeover */
  acknowledged = false;
  private requested = false;
  private gripperClosed = false;

  constructor(private send: CommandSender, private stepFraction = 1.0) {}

  get takeoverRequested(): boolean {
    return this.requested;
  }

  get gripperCommand(): number {
    return this.gripperClosed ? 1.0 : 0.0;
  }

  /** Feed the remote_takeover flag from each telemetry frame. */
  observeTakeover(remoteTakeover: boolean): void {
    this.acknowledged = this.requested && remoteTakeover;
    if (!remoteTakeover && !this.requested) this.acknowledged = false;
  }

  /** Returns true when the key was consumed. */
  handleKey(key: string): boolean {
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
      if (!this.acknowledged) return false;
      this.gripperClosed = !this.gripperClosed;
      this.send({ kind: "action", delta: [0, 0, 0], gripper: this.gripperCommand });
      return true;
    }
    const dir = MOVE[key];
    if (dir) {
      if (!this.acknowledged) return false; // gate on server ack
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
