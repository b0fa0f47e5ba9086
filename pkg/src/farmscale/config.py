"""Flat key-value configuration: defaults, file loading, object builders.

Every constant not pinned by the calibration tables lives here so runs are
fully described by one human-readable file plus a seed.
"""

from __future__ import annotations

import yaml

from .core import EpisodeConfig, RewardConfig
from .metrics import CostConfig
from .sarsa import SarsaConfig
from .dqn import DqnConfig
from .workload import (default_phases, default_size_distribution,
                       reduced_paper_model, SizeDistribution)

DEFAULTS = {
    # workload
    "base_rate": 5.0,  # tasks/second
    "phase_duration": 60.0,  # seconds
    "poisson_window": 5.0,  # seconds
    "mean_service_target": 1.5,  # seconds
    # episode / pool
    "step_duration": 8.0,
    "n_min": 1,
    "n_max": 20,
    "n_init": 4,
    "beta": 2.0,
    "latency_lo": 5.0,
    "latency_hi": 8.0,
    "obs_window": 3,
    "drain_cap": 15,
    "warm_start": True,
    # reward
    "q_target": 0.9,
    "q_queue_target": 40.0,
    "q_idle": 5.0,
    "n_target": 12,
    "w_qos": 10.0,
    "w_backlog": 5.0,
    "w_scale": 0.5,
    "w_eff": 0.5,
    "w_up": 1.0,
    "w_down": 1.0,
    # sarsa
    "sarsa_alpha": 0.1,
    "sarsa_gamma": 0.95,
    "sarsa_trace_decay": 0.9,
    "sarsa_epsilon_start": 1.0,
    "sarsa_epsilon_min": 0.05,
    "sarsa_epsilon_decay": 0.98,
    # dqn
    "dqn_replay_capacity": 75000,
    "dqn_batch_size": 64,
    "dqn_warmup": 1000,
    "dqn_gamma": 0.95,
    "dqn_epsilon_start": 0.8,
    "dqn_epsilon_min": 0.05,
    "dqn_epsilon_decay": 0.97,
    "dqn_tau": 0.01,
    "dqn_learning_rate": 1e-3,
    "dqn_grad_clip": 10.0,
    # cost tariffs
    "cost_c_w": 1.0,
    "cost_c_scale": 0.5,
    "cost_c_sub": 0.6,
    "cost_c_burst": 2.0,
    "cost_n_sub": 10,
}


def load_config(path=None) -> dict:
    """DEFAULTS overlaid with the flat key-value file at ``path``, if any."""
    cfg = dict(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{path}: expected a flat key-value mapping")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
        cfg.update(loaded)
    return cfg


def episode_config(cfg: dict) -> EpisodeConfig:
    phases = default_phases(base_rate=cfg["base_rate"],
                            duration=cfg["phase_duration"],
                            window=cfg["poisson_window"])
    return EpisodeConfig(
        phases=phases,
        step_duration=cfg["step_duration"],
        n_min=int(cfg["n_min"]),
        n_max=int(cfg["n_max"]),
        n_init=int(cfg["n_init"]),
        beta=cfg["beta"],
        scale_up_latency=(cfg["latency_lo"], cfg["latency_hi"]),
        obs_window=int(cfg["obs_window"]),
        drain_cap=int(cfg["drain_cap"]),
        warm_start=bool(cfg["warm_start"]),
    )


def reward_config(cfg: dict) -> RewardConfig:
    return RewardConfig(
        q_target=cfg["q_target"],
        q_queue_target=cfg["q_queue_target"],
        q_idle=cfg["q_idle"],
        n_target=int(cfg["n_target"]),
        w_qos=cfg["w_qos"],
        w_backlog=cfg["w_backlog"],
        w_scale=cfg["w_scale"],
        w_eff=cfg["w_eff"],
        w_up=cfg["w_up"],
        w_down=cfg["w_down"],
    )


def sarsa_config(cfg: dict) -> SarsaConfig:
    return SarsaConfig(
        alpha=cfg["sarsa_alpha"],
        gamma=cfg["sarsa_gamma"],
        trace_decay=cfg["sarsa_trace_decay"],
        epsilon_start=cfg["sarsa_epsilon_start"],
        epsilon_min=cfg["sarsa_epsilon_min"],
        epsilon_decay=cfg["sarsa_epsilon_decay"],
    )


def dqn_config(cfg: dict) -> DqnConfig:
    return DqnConfig(
        replay_capacity=int(cfg["dqn_replay_capacity"]),
        batch_size=int(cfg["dqn_batch_size"]),
        warmup=int(cfg["dqn_warmup"]),
        gamma=cfg["dqn_gamma"],
        epsilon_start=cfg["dqn_epsilon_start"],
        epsilon_min=cfg["dqn_epsilon_min"],
        epsilon_decay=cfg["dqn_epsilon_decay"],
        tau=cfg["dqn_tau"],
        learning_rate=cfg["dqn_learning_rate"],
        grad_clip=cfg["dqn_grad_clip"],
    )


def cost_config(cfg: dict) -> CostConfig:
    return CostConfig(
        c_w=cfg["cost_c_w"],
        c_scale=cfg["cost_c_scale"],
        c_sub=cfg["cost_c_sub"],
        c_burst=cfg["cost_c_burst"],
        n_sub=int(cfg["cost_n_sub"]),
    )


def service_model_and_sizes(cfg: dict):
    """(service-time model, size distribution) from the calibrated defaults."""
    model = reduced_paper_model()
    dist = default_size_distribution(model,
                                     mean_target=cfg["mean_service_target"])
    return model, dist


def dump_defaults(path):
    with open(path, "w") as fh:
        yaml.safe_dump(DEFAULTS, fh, sort_keys=False)
