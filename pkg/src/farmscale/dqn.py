"""Double value-learning agent on the continuous observation vector.

Online network picks the greedy next action, a slowly-tracking target
network evaluates it. Transitions live in a FIFO ring buffer with clipped
rewards; training starts after a warm-up and each step ends with a soft
target update.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .core import ACTIONS
from .nn import Adam, Mlp, clip_gradient_norm, soft_update

HIDDEN_LAYERS = (128, 64)


@dataclass(frozen=True)
class DqnConfig:
    replay_capacity: int = 75_000
    batch_size: int = 64
    warmup: int = 1_000
    gamma: float = 0.95
    epsilon_start: float = 0.8
    epsilon_min: float = 0.05
    epsilon_decay: float = 0.97  # multiplicative, per episode
    tau: float = 0.01
    learning_rate: float = 1e-3
    grad_clip: float = 10.0
    reward_clip: tuple = (-100.0, 100.0)

    def __post_init__(self):
        if self.warmup > self.replay_capacity:
            raise ValueError("warmup must not exceed replay capacity")
        if not (0 < self.tau <= 1):
            raise ValueError("tau must lie in (0, 1]")


class ReplayBuffer:
    """Fixed-capacity FIFO store of (obs, action, reward, next_obs, done)."""

    def __init__(self, capacity: int, obs_dim: int = 9):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._head = 0

    def push(self, obs, action_idx, reward, next_obs, done):
        i = self._head
        self.obs[i] = obs
        self.actions[i] = action_idx
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = done
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return (self.obs[idx], self.actions[idx], self.rewards[idx],
                self.next_obs[idx], self.dones[idx])


def double_dqn_targets(policy: Mlp, target: Mlp, rewards, next_obs, dones,
                       gamma: float) -> np.ndarray:
    """y = r for terminal transitions, else r + gamma * Q_target(s', a*)
    where a* is the online network's greedy action on s'."""
    next_q_policy = policy.forward(next_obs)
    greedy = np.argmax(next_q_policy, axis=1)
    next_q_target = target.forward(next_obs)
    evaluated = next_q_target[np.arange(len(greedy)), greedy]
    return rewards + gamma * evaluated * (~np.asarray(dones, dtype=bool))


class DqnAgent:
    name = "dqn"

    def __init__(self, obs_lows, obs_highs, cfg: DqnConfig = DqnConfig(),
                 seed: int = 0):
        self.cfg = cfg
        self.obs_lows = np.asarray(obs_lows, dtype=float)
        self.obs_highs = np.asarray(obs_highs, dtype=float)
        self.rng = np.random.default_rng([seed, 50_000])
        layers = (len(self.obs_lows), *HIDDEN_LAYERS, len(ACTIONS))
        self.policy = Mlp(layers, self.rng)
        self.target = self.policy.copy()
        self.optimizer = Adam(self.policy.parameters(), lr=cfg.learning_rate)
        self.buffer = ReplayBuffer(cfg.replay_capacity, len(self.obs_lows))
        self.epsilon = cfg.epsilon_start
        self.last_loss = float("nan")

    def normalize(self, obs) -> np.ndarray:
        x = np.asarray(obs.as_tuple(), dtype=float)
        span = self.obs_highs - self.obs_lows
        return np.clip((x - self.obs_lows) / span, 0.0, 1.0)

    def begin_episode(self):
        pass

    def act(self, obs, greedy: bool = False) -> int:
        if not greedy and self.rng.random() < self.epsilon:
            return ACTIONS[int(self.rng.integers(len(ACTIONS)))]
        values = self.policy.forward(self.normalize(obs))
        # ties break to the largest index, matching the tabular agent
        idx = len(values) - 1 - int(np.argmax(values[::-1]))
        return ACTIONS[idx]

    def learn(self, obs, action: int, reward: float, next_obs,
              next_action: int, done: bool):
        lo, hi = self.cfg.reward_clip
        self.buffer.push(self.normalize(obs), ACTIONS.index(action),
                         float(np.clip(reward, lo, hi)),
                         self.normalize(next_obs), done)
        self.last_loss = self.train_step()

    def train_step(self):
        """One batch update; no-op (returns nan) before warm-up."""
        if self.buffer.size < self.cfg.warmup:
            return float("nan")
        obs, actions, rewards, next_obs, dones = self.buffer.sample(
            self.cfg.batch_size, self.rng)
        targets = double_dqn_targets(self.policy, self.target, rewards,
                                     next_obs, dones, self.cfg.gamma)
        loss, grads = self.policy.loss_and_gradients(obs, actions, targets)
        grads = clip_gradient_norm(grads, self.cfg.grad_clip)
        self.optimizer.step(grads)
        soft_update(self.target, self.policy, self.cfg.tau)
        return loss

    def end_episode(self):
        self.epsilon = max(self.cfg.epsilon_min,
                           self.epsilon * self.cfg.epsilon_decay)

    def select_action(self, obs, info) -> int:
        return self.act(obs, greedy=True)

    # -- persistence ---------------------------------------------------------

    def save(self, path):
        meta = {
            "kind": "dqn",
            "version": 1,
            "config": {**asdict(self.cfg),
                       "reward_clip": list(self.cfg.reward_clip)},
            "epsilon": self.epsilon,
            "layer_sizes": list(self.policy.layer_sizes),
        }
        arrays = {"obs_lows": self.obs_lows, "obs_highs": self.obs_highs,
                  "meta": np.array(json.dumps(meta))}
        for i, (w, b) in enumerate(zip(self.policy.weights, self.policy.biases)):
            arrays[f"w{i}"] = w
            arrays[f"b{i}"] = b
        for i, (w, b) in enumerate(zip(self.target.weights, self.target.biases)):
            arrays[f"tw{i}"] = w
            arrays[f"tb{i}"] = b
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "DqnAgent":
        data = np.load(path if str(path).endswith(".npz") else f"{path}.npz",
                       allow_pickle=False)
        meta = json.loads(str(data["meta"]))
        if meta.get("kind") != "dqn":
            raise ValueError(f"{path} is not a dqn checkpoint")
        cfg_dict = dict(meta["config"])
        cfg_dict["reward_clip"] = tuple(cfg_dict["reward_clip"])
        agent = cls(data["obs_lows"], data["obs_highs"],
                    cfg=DqnConfig(**cfg_dict))
        agent.epsilon = meta["epsilon"]
        n_layers = len(meta["layer_sizes"]) - 1
        agent.policy.weights = [data[f"w{i}"] for i in range(n_layers)]
        agent.policy.biases = [data[f"b{i}"] for i in range(n_layers)]
        agent.target.weights = [data[f"tw{i}"] for i in range(n_layers)]
        agent.target.biases = [data[f"tb{i}"] for i in range(n_layers)]
        agent.optimizer = Adam(agent.policy.parameters(),
                               lr=agent.cfg.learning_rate)
        return agent
