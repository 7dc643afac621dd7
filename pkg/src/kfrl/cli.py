"""Command-line entry points for the keyframe-reward RL toolkit."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import labsim
from .core import TASK_IDS, load_config, make_config, read_trajectory, rng_stream, write_trajectory
from .encoder import encode_trajectory, spec_for_config
from .keyframe import extract_keyframes, keyframes_to_json
from .reward import replay_rewards
from .targetgen import generate_targets, read_targets, write_targets


def _config(args) -> "RunConfig":
    if getattr(args, "config", None):
        return load_config(args.config, getattr(args, "task", None))
    return make_config(args.task)


def cmd_demo_collect(args) -> int:
    trajs = labsim.collect_demos(args.task, args.episodes, args.seed, args.noise)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.episodes == 1:
        write_trajectory(out, trajs[0])
    else:
        out.mkdir(parents=True, exist_ok=True)
        for i, t in enumerate(trajs):
            write_trajectory(out / f"demo_{i:03d}.jsonl", t)
    print(f"collected {len(trajs)} demo(s) -> {out}")
    return 0


def _encoded(path: str, cfg) -> "Trajectory":
    traj = read_trajectory(path)
    if not traj.has_latents:
        enc = spec_for_config(cfg, {v: len(r) for v, r in traj.steps[0].raw_views.items()})
        traj = encode_trajectory(enc, traj)
    return traj


def cmd_keyframes_extract(args) -> int:
    cfg = _config(args)
    traj = _encoded(args.infile, cfg)
    ks = extract_keyframes(traj, cfg)
    Path(args.out).write_text(keyframes_to_json(ks) + "\n")
    print(f"candidates={len(ks.candidates)} selected={list(ks.selected)} -> {args.out}")
    return 0


def cmd_targets_build(args) -> int:
    cfg = _config(args)
    traj = _encoded(args.demo, cfg)
    targets = generate_targets(traj, cfg, rng_stream(cfg.seed, "targetgen"))
    write_targets(args.out, targets)
    print(f"H={targets.n_stages} frames={list(targets.frame_indices)} -> {args.out}")
    return 0


def cmd_reward_replay(args) -> int:
    cfg = _config(args)
    traj = _encoded(args.traj, cfg)
    targets = read_targets(args.targets)
    rewards, final_stage = replay_rewards(traj, targets, cfg)
    from .reward import make_tracker
    tracker = make_tracker(targets, cfg)
    print("t\tsimilarity\tM\treward")
    for t, step in enumerate(traj.steps):
        sim = tracker.similarity(step.latents) if not tracker.complete else float("nan")
        m = tracker.stage
        if not tracker.complete:
            tracker.step(step.latents)
        print(f"{t}\t{sim:.6f}\t{m}\t{rewards[t]:.6f}")
    print(f"# final M = {final_stage}, total = {rewards.sum():.6f}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    from .rl import REWARD_MODES, run_training, write_report

    cfg = _config(args)
    if args.seed is not None:
        cfg.seed = args.seed
    mode = {"guided": "keyframe_guided", "sparse": "sparse_terminal"}[args.reward]
    if args.serve_port is not None:
        from .opsservice import serve
        serve(cfg, mode, args.steps, args.serve_port, out_dir=args.out,
              static_dir=args.static_dir, use_remote=(args.oracle == "remote"))
        return 0
    if args.oracle == "remote":
        print("remote oracle requires --serve-port", file=sys.stderr)
        return 2
    report, learner = run_training(cfg, mode, args.steps)
    if args.out:
        write_report(args.out, report, learner)
    print(f"episodes={len(report.episodes)} eval_success={report.eval_success:.2f}")
    return 0


def cmd_eval(args) -> int:
    from .nets import load_tensors, policy_from_tensors
    from .rl import evaluate_policy

    cfg = _config(args)
    policy = policy_from_tensors(load_tensors(args.policy))
    enc = spec_for_config(cfg, labsim.VIEW_DIMS)
    rate = evaluate_policy(policy, cfg, enc, args.episodes)
    print(f"success_rate={rate:.2f} over {args.episodes} episodes")
    return 0


def cmd_ablate(args) -> int:
    from .evalkit import run_ablation_suite

    seeds = [int(s) for s in args.seeds.split(",")]
    run_ablation_suite(args.suite, seeds, args.out)
    print(f"{args.suite} suite -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kfrl",
                                description="keyframe-guided reward RL toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("demo", help="demonstration collection")
    dsub = d.add_subparsers(dest="subcommand", required=True)
    dc = dsub.add_parser("collect", help="run the scripted expert")
    dc.add_argument("--task", required=True, choices=sorted(TASK_IDS))
    dc.add_argument("--episodes", type=int, default=1)
    dc.add_argument("--noise", type=float, default=0.2)
    dc.add_argument("--seed", type=int, default=0)
    dc.add_argument("--out", required=True)
    dc.set_defaults(func=cmd_demo_collect)

    k = sub.add_parser("keyframes", help="keyframe extraction")
    ksub = k.add_subparsers(dest="subcommand", required=True)
    ke = ksub.add_parser("extract")
    ke.add_argument("--in", dest="infile", required=True)
    ke.add_argument("--config")
    ke.add_argument("--task")
    ke.add_argument("--out", required=True)
    ke.set_defaults(func=cmd_keyframes_extract)

    t = sub.add_parser("targets", help="stage-target construction")
    tsub = t.add_subparsers(dest="subcommand", required=True)
    tb = tsub.add_parser("build")
    tb.add_argument("--demo", required=True)
    tb.add_argument("--config")
    tb.add_argument("--task")
    tb.add_argument("--out", required=True)
    tb.set_defaults(func=cmd_targets_build)

    r = sub.add_parser("reward", help="reward replay")
    rsub = r.add_subparsers(dest="subcommand", required=True)
    rr = rsub.add_parser("replay")
    rr.add_argument("--traj", required=True)
    rr.add_argument("--targets", required=True)
    rr.add_argument("--config")
    rr.add_argument("--task")
    rr.set_defaults(func=cmd_reward_replay)

    tr = sub.add_parser("train", help="online actor-critic training")
    tr.add_argument("--task", required=True, choices=sorted(TASK_IDS))
    tr.add_argument("--config")
    tr.add_argument("--reward", choices=("guided", "sparse"), default="guided")
    tr.add_argument("--steps", type=int, default=30000)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--oracle", choices=("scripted", "remote"), default="scripted")
    tr.add_argument("--out")
    tr.add_argument("--serve-port", type=int, default=None,
                    help="also run the telemetry/intervention service")
    tr.add_argument("--static-dir", default=None,
                    help="dashboard bundle to serve at /")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a saved policy")
    ev.add_argument("--policy", required=True)
    ev.add_argument("--task", required=True, choices=sorted(TASK_IDS))
    ev.add_argument("--config")
    ev.add_argument("--episodes", type=int, default=20)
    ev.set_defaults(func=cmd_eval)

    ab = sub.add_parser("ablate", help="ablation suites")
    ab.add_argument("--suite", required=True, choices=("keyframe", "reward"))
    ab.add_argument("--seeds", default="0,1,2,3,4")
    ab.add_argument("--out", required=True)
    ab.set_defaults(func=cmd_ablate)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
