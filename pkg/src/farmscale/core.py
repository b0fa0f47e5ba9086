"""Shared domain types for the farm autoscaling simulator.

Everything here is a plain value object: tasks, observations, episode and
reward configuration, and the per-episode log from which all metrics are
derived. No module-level mutable state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

ACTIONS = (-1, 0, 1)

OBSERVATION_FIELDS = (
    "q_in",
    "q_work",
    "q_res",
    "q_out",
    "n_workers",
    "t_proc_avg",
    "t_proc_max",
    "arrival_rate",
    "qos_step",
)

STEP_COLUMNS = (
    "step",
    "q_in",
    "q_work",
    "q_res",
    "q_out",
    "n_workers",
    "t_proc_avg",
    "t_proc_max",
    "arrival_rate",
    "qos_step",
    "action",
    "applied_delta",
    "reward",
    "arrived",
    "completed",
    "hits",
)

TASK_COLUMNS = (
    "task_id",
    "arrival",
    "size",
    "service",
    "deadline",
    "completion",
    "met",
)


def compute_deadline(expected_service: float, beta: float) -> float:
    """Deadline allowance for a task: ``beta * expected_service``."""
    if expected_service <= 0:
        raise ValueError(f"expected_service must be positive, got {expected_service}")
    if beta <= 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    return beta * expected_service


def deadline_met(arrival: float, completion: float, deadline: float) -> bool:
    """True when end-to-end latency is within the allowance (boundary counts)."""
    if completion < arrival:
        raise ValueError(f"completion {completion} precedes arrival {arrival}")
    return completion - arrival <= deadline


@dataclass(frozen=True)
class TaskSpec:
    """One stream item: arrival, size, expected service time and deadline."""

    task_id: int
    arrival_time: float
    size_px: int
    service_time: float
    deadline: float
    phase_index: int

    def __post_init__(self):
        if self.service_time <= 0:
            raise ValueError("service_time must be positive")
        if self.deadline <= self.service_time:
            raise ValueError("deadline must exceed service_time")


@dataclass(frozen=True)
class Observation:
    """9-component farm state read at a control-step boundary."""

    q_in: int
    q_work: int
    q_res: int
    q_out: int
    n_workers: int
    t_proc_avg: float
    t_proc_max: float
    arrival_rate: float
    qos_step: float

    def as_tuple(self) -> tuple:
        return (
            self.q_in,
            self.q_work,
            self.q_res,
            self.q_out,
            self.n_workers,
            self.t_proc_avg,
            self.t_proc_max,
            self.arrival_rate,
            self.qos_step,
        )

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Observation":
        if len(values) != 9:
            raise ValueError(f"expected 9 components, got {len(values)}")
        return cls(
            q_in=int(values[0]),
            q_work=int(values[1]),
            q_res=int(values[2]),
            q_out=int(values[3]),
            n_workers=int(values[4]),
            t_proc_avg=float(values[5]),
            t_proc_max=float(values[6]),
            arrival_rate=float(values[7]),
            qos_step=float(values[8]),
        )


@dataclass(frozen=True)
class EpisodeConfig:
    """Episode-level configuration: workload phases, pool bounds, timing."""

    phases: tuple
    step_duration: float = 8.0
    n_min: int = 1
    n_max: int = 20
    n_init: int = 4
    beta: float = 2.0
    scale_up_latency: tuple = (5.0, 8.0)
    obs_window: int = 3
    drain_cap: int = 15
    warm_start: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if not (1 <= self.n_min <= self.n_init <= self.n_max):
            raise ValueError(
                f"need 1 <= n_min <= n_init <= n_max, got "
                f"{self.n_min}/{self.n_init}/{self.n_max}"
            )
        if self.step_duration <= 0:
            raise ValueError("step_duration must be positive")
        if self.beta <= 1:
            raise ValueError("beta must exceed 1")
        lo, hi = self.scale_up_latency
        if lo > hi or lo < 0:
            raise ValueError(f"bad scale_up_latency interval [{lo}, {hi}]")

    @property
    def total_duration(self) -> float:
        return sum(p.duration for p in self.phases)


@dataclass(frozen=True)
class RewardConfig:
    """Targets, thresholds and weights of the shaped per-step reward."""

    q_target: float = 0.9
    q_queue_target: float = 40.0
    q_idle: float = 5.0
    n_target: int = 12
    w_qos: float = 10.0
    w_backlog: float = 5.0
    w_scale: float = 0.5
    w_eff: float = 0.5
    w_up: float = 1.0
    w_down: float = 1.0

    def __post_init__(self):
        if self.q_queue_target <= 0:
            raise ValueError("q_queue_target must be positive")
        if self.q_idle > self.q_queue_target:
            raise ValueError("q_idle must not exceed q_queue_target")
        if not (0 < self.q_target <= 1):
            raise ValueError("q_target must lie in (0, 1]")


@dataclass
class StepRecord:
    step: int
    observation: Observation
    action: int
    applied_delta: int
    reward: float
    arrived: int
    completed: int
    hits: int
    reward_terms: dict = field(default_factory=dict)


@dataclass
class TaskRecord:
    task_id: int
    arrival: float
    size: int
    service: float
    deadline: float
    completion: float  # nan when never completed
    met: bool
    phase_index: int = 0


@dataclass
class EpisodeLog:
    """Per-step and per-task records of one episode."""

    n_tasks: int = 0
    steps: list = field(default_factory=list)
    tasks: list = field(default_factory=list)

    def add_step(self, record: StepRecord):
        self.steps.append(record)

    def add_task(self, record: TaskRecord):
        self.tasks.append(record)

    @property
    def total_arrived(self) -> int:
        return sum(s.arrived for s in self.steps)

    @property
    def total_completed(self) -> int:
        return sum(s.completed for s in self.steps)

    def step_rows(self) -> Iterable[tuple]:
        for s in self.steps:
            yield (s.step, *s.observation.as_tuple(), s.action,
                   s.applied_delta, s.reward, s.arrived, s.completed, s.hits)

    def write_step_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(STEP_COLUMNS)
            writer.writerows(self.step_rows())

    def write_task_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TASK_COLUMNS)
            for t in self.tasks:
                writer.writerow((t.task_id, t.arrival, t.size, t.service,
                                 t.deadline, t.completion, int(t.met)))


def read_step_csv(path) -> list:
    """Round-trip loader for the step CSV; observations come back intact."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            obs = Observation.from_values(
                [float(row[name]) for name in OBSERVATION_FIELDS])
            records.append(StepRecord(
                step=int(row["step"]),
                observation=obs,
                action=int(row["action"]),
                applied_delta=int(row["applied_delta"]),
                reward=float(row["reward"]),
                arrived=int(row["arrived"]),
                completed=int(row["completed"]),
                hits=int(row["hits"]),
            ))
    return records
