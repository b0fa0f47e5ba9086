"""Command-line harness: calibrate, workload, run, train, compare."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dqn import DqnAgent
from .env import FarmEnv
from .metrics import aggregate, cost_paygo, cost_sub
from .reactive import ReactiveAveragePolicy, ReactiveMaximumPolicy
from .sarsa import SarsaAgent
from .training import run_episode, train_agent, write_training_curve
from .workload import (CALIBRATION_SAMPLES, build_episode_workload,
                       fit_service_model, write_workload_csv)


class CliError(Exception):
    pass


def _load_samples(path):
    samples = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().lower() in ("size", "size_px"):
                continue
            try:
                samples.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise CliError(f"{path}:{lineno}: expected 'size,mean_time'")
    if not samples:
        raise CliError(f"{path}: no samples found")
    return samples


def cmd_calibrate(args):
    samples = (_load_samples(args.samples) if args.samples
               else list(CALIBRATION_SAMPLES))
    full = fit_service_model(samples, form="full")
    reduced = fit_service_model(samples, form="reduced")
    report = {
        "full": {"a": full.a, "b": full.b, "c": full.c,
                 "r_squared": full.r_squared, "rss": full.rss},
        "reduced": {"a": reduced.a, "c": reduced.c,
                    "r_squared": reduced.r_squared, "rss": reduced.rss},
        "delta_rss": reduced.rss - full.rss,
    }
    print(f"full:    a={full.a:.4e} b={full.b:.4e} c={full.c:.4e} "
          f"R2={full.r_squared:.6f} RSS={full.rss:.4e}")
    print(f"reduced: a={reduced.a:.4e} c={reduced.c:.4e} "
          f"R2={reduced.r_squared:.6f} RSS={reduced.rss:.4e}")
    print(f"delta_rss={report['delta_rss']:.4e}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
    return 0


def cmd_workload(args):
    cfg = cfgmod.load_config(args.config)
    episode_cfg = cfgmod.episode_config(cfg)
    model, dist = cfgmod.service_model_and_sizes(cfg)
    tasks = build_episode_workload(episode_cfg, dist, model,
                                   shuffle_phases=args.shuffle,
                                   rng_seed=args.seed)
    write_workload_csv(tasks, args.out)
    counts = {}
    for t in tasks:
        counts[t.phase_index] = counts.get(t.phase_index, 0) + 1
    for phase in sorted(counts):
        print(f"phase {phase}: {counts[phase]} tasks")
    print(f"total: {len(tasks)} tasks -> {args.out}")
    return 0


def _make_policy(spec: str, env: FarmEnv):
    kind, _, ckpt = spec.partition(":")
    if kind == "reactive-avg":
        return ReactiveAveragePolicy(env.config.step_duration)
    if kind == "reactive-max":
        return ReactiveMaximumPolicy(env.config.step_duration)
    if kind == "sarsa":
        if not ckpt:
            raise CliError("sarsa policy needs a checkpoint: sarsa:<path>")
        return SarsaAgent.load(ckpt)
    if kind == "dqn":
        if not ckpt:
            raise CliError("dqn policy needs a checkpoint: dqn:<path>")
        return DqnAgent.load(ckpt)
    raise CliError(f"unknown policy {spec!r}; use reactive-avg, reactive-max, "
                   f"sarsa:<ckpt> or dqn:<ckpt>")


def cmd_run(args):
    cfg = cfgmod.load_config(args.config)
    episode_cfg = cfgmod.episode_config(cfg)
    model, dist = cfgmod.service_model_and_sizes(cfg)
    env = FarmEnv(episode_cfg, cfgmod.reward_config(cfg))
    policy = _make_policy(args.policy, env)
    workload = build_episode_workload(episode_cfg, dist, model,
                                      shuffle_phases=args.shuffle,
                                      rng_seed=args.seed)
    summary = run_episode(env, policy, workload, args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    env.log.write_step_csv(out / "steps.csv")
    env.log.write_task_csv(out / "tasks.csv")
    (out / "summary.json").write_text(json.dumps(summary.as_dict(), indent=2))
    print(f"final_qos={summary.final_qos:.4f} mean_workers={summary.n_mean:.2f} "
          f"scaling_actions={summary.n_scale} -> {out}")
    return 0


def cmd_train(args):
    cfg = cfgmod.load_config(args.config)
    episode_cfg = cfgmod.episode_config(cfg)
    model, dist = cfgmod.service_model_and_sizes(cfg)
    env = FarmEnv(episode_cfg, cfgmod.reward_config(cfg))

    if args.agent == "sarsa":
        agent = SarsaAgent(cfgmod.sarsa_config(cfg), seed=args.seed)
        ckpt_name = "sarsa.json"
    elif args.agent == "dqn":
        lows, highs = env.observation_bounds()
        agent = DqnAgent(lows, highs, cfgmod.dqn_config(cfg), seed=args.seed)
        ckpt_name = "dqn.npz"
    else:
        raise CliError(f"unknown agent {args.agent!r}")

    records = train_agent(agent, env, dist, model, episodes=args.episodes,
                          base_seed=args.seed, shuffle=args.shuffle)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    agent.save(out / ckpt_name)
    write_training_curve(records, out / "training_curve.csv")
    last = records[-1]
    print(f"trained {args.agent} for {len(records)} episodes "
          f"(last qos={last.final_qos:.4f}, eps={last.epsilon:.3f}) -> {out}")
    return 0


def cmd_compare(args):
    cfg = cfgmod.load_config(args.config)
    episode_cfg = cfgmod.episode_config(cfg)
    model, dist = cfgmod.service_model_and_sizes(cfg)
    cost_cfg = cfgmod.cost_config(cfg)
    seeds = [int(s) for s in args.seeds.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    phase_rows = []
    for spec in args.policies.split(","):
        env = FarmEnv(episode_cfg, cfgmod.reward_config(cfg))
        policy = _make_policy(spec.strip(), env)
        summaries, paygo, sub = [], [], []
        for seed in seeds:
            workload = build_episode_workload(episode_cfg, dist, model,
                                              shuffle_phases=False,
                                              rng_seed=seed)
            summaries.append(run_episode(env, policy, workload, seed))
            series = [st.observation.n_workers for st in env.log.steps]
            paygo.append(cost_paygo(series, episode_cfg.step_duration, cost_cfg))
            sub.append(cost_sub(series, episode_cfg.step_duration, cost_cfg))

        name = spec.split(":")[0]
        row = {"policy": name}
        for label, values in (
                ("final_qos", [s.final_qos for s in summaries]),
                ("mean_workers", [s.n_mean for s in summaries]),
                ("max_workers", [s.n_max for s in summaries]),
                ("scaling_actions", [s.n_scale for s in summaries]),
                ("no_op_actions", [s.no_ops for s in summaries]),
                ("cost_paygo", paygo),
                ("cost_sub", sub)):
            mean, std = aggregate(values)
            row[f"{label}_mean"] = mean
            row[f"{label}_std"] = std
        rows.append(row)

        for phase in range(len(episode_cfg.phases)):
            qos_m, qos_s = aggregate(
                [s.per_phase[phase].qos for s in summaries])
            w_m, w_s = aggregate(
                [s.per_phase[phase].mean_workers for s in summaries])
            phase_rows.append({
                "policy": name, "phase": phase,
                "qos_mean": qos_m, "qos_std": qos_s,
                "mean_workers_mean": w_m, "mean_workers_std": w_s,
            })
        print(f"{name}: qos={row['final_qos_mean']:.4f}"
              f"±{row['final_qos_std']:.4f} "
              f"scaling={row['scaling_actions_mean']:.1f}")

    _write_dict_csv(out / "comparison.csv", rows)
    _write_dict_csv(out / "per_phase.csv", phase_rows)
    print(f"-> {out}")
    return 0


def _write_dict_csv(path, rows):
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farmscale",
        description="Virtual-time farm autoscaling simulator and policies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit the quadratic service-time model")
    p.add_argument("--samples", help="CSV of size,mean_time (default: built-in)")
    p.add_argument("--out", help="write the fit report JSON here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("workload", help="generate an episode task stream")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_workload)

    p = sub.add_parser("run", help="run one episode under a policy")
    p.add_argument("--config")
    p.add_argument("--policy", required=True,
                   help="reactive-avg | reactive-max | sarsa:<ckpt> | dqn:<ckpt>")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="train a learning agent")
    p.add_argument("--config")
    p.add_argument("--agent", choices=("sarsa", "dqn"), required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shuffle", action="store_true", default=True)
    p.add_argument("--no-shuffle", dest="shuffle", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="evaluate policies over seeds")
    p.add_argument("--config")
    p.add_argument("--policies", required=True,
                   help="comma-separated policy specs")
    p.add_argument("--seeds", required=True, help="comma-separated seed list")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
