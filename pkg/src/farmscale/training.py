"""Episode loops: policy evaluation and on-line agent training.

Agents implement begin_episode/act/learn/end_episode; frozen policies
(reactive baselines or loaded checkpoints) only need select_action(obs,
info). All randomness is seeded per episode, so runs are reproducible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .env import FarmEnv
from .metrics import summarize_episode
from .workload import build_episode_workload


@dataclass
class TrainingRecord:
    episode: int
    epsilon: float
    total_reward: float
    final_qos: float
    mean_workers: float
    max_workers: int
    scaling_actions: int
    no_ops: int
    steps: int


CURVE_COLUMNS = ("episode", "epsilon", "total_reward", "final_qos",
                 "mean_workers", "max_workers", "scaling_actions",
                 "no_ops", "steps")


def run_episode(env: FarmEnv, policy, workload, seed: int):
    """One greedy episode under a frozen policy; returns the summary."""
    obs, info = env.reset(workload, seed)
    done = False
    while not done:
        action = policy.select_action(obs, info)
        obs, _, done, info = env.step(action)
    return summarize_episode(env.log, env.config)


def train_agent(agent, env: FarmEnv, dist, model, episodes: int,
                base_seed: int = 0, shuffle: bool = True,
                progress=None) -> list:
    """On-line training over freshly generated workloads, one per episode."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    records = []
    for ep in range(episodes):
        seed = base_seed + ep
        workload = build_episode_workload(env.config, dist, model,
                                          shuffle_phases=shuffle,
                                          rng_seed=seed)
        obs, info = env.reset(workload, seed)
        agent.begin_episode()
        action = agent.act(obs)
        done = False
        while not done:
            next_obs, reward, done, info = env.step(action)
            next_action = agent.act(next_obs) if not done else 0
            agent.learn(obs, action, reward, next_obs, next_action, done)
            obs, action = next_obs, next_action
        agent.end_episode()
        summary = summarize_episode(env.log, env.config)
        records.append(TrainingRecord(
            episode=ep,
            epsilon=agent.epsilon,
            total_reward=summary.total_reward,
            final_qos=summary.final_qos,
            mean_workers=summary.n_mean,
            max_workers=summary.n_max,
            scaling_actions=summary.n_scale,
            no_ops=summary.no_ops,
            steps=summary.steps,
        ))
        if progress is not None:
            progress(records[-1])
    return records


def evaluate_policy(policy, env: FarmEnv, dist, model, seeds,
                    shuffle: bool = False) -> list:
    """Greedy evaluation over a list of seeds; one summary per seed."""
    summaries = []
    for seed in seeds:
        workload = build_episode_workload(env.config, dist, model,
                                          shuffle_phases=shuffle,
                                          rng_seed=seed)
        summaries.append(run_episode(env, policy, workload, seed))
    return summaries


def write_training_curve(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for r in records:
            writer.writerow((r.episode, r.epsilon, r.total_reward,
                             r.final_qos, r.mean_workers, r.max_workers,
                             r.scaling_actions, r.no_ops, r.steps))
