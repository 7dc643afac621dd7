/** Wire-format types for the training telemetry and command channel. */

export interface StageInfo {
  name: string;
  center: [number, number, number];
  radius: number;
}

export interface TelemetryFrame {
  step: number;
  episode: number;
  ee_pos: [number, number, number];
  object_pos: [number, number, number];
  gripper: number;
  held: boolean;
  stage_gt: number;
  stages: StageInfo[];
  progress: number;
  similarity: number;
  reward: number;
  demo_buffer: number;
  online_buffer: number;
  success_rate: number;
  intervention_rate: number;
  takeover: boolean;
  paused: boolean;
  remote_takeover: boolean;
  notices?: string[];
}

export type CommandKind =
  | "takeover"
  | "release"
  | "action"
  | "mark_success"
  | "abort_episode"
  | "pause"
  | "resume";

export interface Command {
  kind: CommandKind;
  delta?: [number, number, number];
  gripper?: number;
}

export interface CommandResponse {
  accepted: boolean;
  reason: string;
}

export interface StatusInfo {
  task_id: string;
  seed: number;
  reward_mode: string;
  total_steps: number;
  step: number;
  episode: number;
  paused: boolean;
  remote_takeover: boolean;
  done: boolean;
}

export function isTelemetryFrame(x: unknown): x is TelemetryFrame {
  if (typeof x !== "object" || x === null) return false;
  const f = x as Record<string, unknown>;
  return (
    typeof f.step === "number" &&
    typeof f.episode === "number" &&
    Array.isArray(f.ee_pos) &&
    f.ee_pos.length === 3
  );
}
