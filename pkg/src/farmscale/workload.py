"""Calibrated service-time model and four-phase task stream generation.

The service-time model is a quadratic polynomial in image side length,
fitted by least squares to per-size mean pipeline timings. Task streams
are windowed Poisson processes whose per-phase totals are exact: the last
window of each phase is adjusted to hit the configured target count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import TaskSpec, compute_deadline

SUPPORTED_SIZES = (512, 1024, 2048, 4096)

# Per-size mean pipeline timings (seconds) used as the default calibration
# sample set; one mean per supported size.
CALIBRATION_SAMPLES = (
    (512, 0.042583251),
    (1024, 0.170206896),
    (2048, 0.737641988),
    (4096, 2.867090161),
)

MEAN_SERVICE_TARGET = 1.5  # seconds, mean per-task load across the size mix


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceTimeModel:
    """T(x) = a*x^2 + b*x + c; the reduced form pins b = 0."""

    a: float
    b: float
    c: float
    form: str  # "full" | "reduced"
    r_squared: float = float("nan")
    rss: float = float("nan")

    def predict(self, size: float) -> float:
        if size <= 0:
            raise ValueError(f"size must be positive, got {size}")
        t = self.a * size * size + self.b * size + self.c
        if t <= 0:
            raise ValueError(f"model predicts non-positive time {t} at size {size}")
        return t


def reduced_paper_model() -> ServiceTimeModel:
    """Reduced quadratic with the published calibration coefficients."""
    return ServiceTimeModel(a=1.7101e-07, b=0.0, c=1.665e-03, form="reduced",
                            r_squared=0.999904, rss=4.946e-04)


def fit_service_model(samples, form: str = "reduced") -> ServiceTimeModel:
    """Least-squares fit of the quadratic model to (size, mean_time) pairs."""
    if form not in ("full", "reduced"):
        raise ValueError(f"unknown form {form!r}")
    sizes = np.array([s for s, _ in samples], dtype=float)
    times = np.array([t for _, t in samples], dtype=float)
    n_distinct = len(np.unique(sizes))
    needed = 4 if form == "full" else 3
    if n_distinct < needed:
        raise FitError(f"{form} fit needs >= {needed} distinct sizes, got {n_distinct}")

    if form == "full":
        design = np.column_stack([sizes**2, sizes, np.ones_like(sizes)])
    else:
        design = np.column_stack([sizes**2, np.ones_like(sizes)])
    coef, _, rank, _ = np.linalg.lstsq(design, times, rcond=None)
    if rank < design.shape[1]:
        raise FitError("rank-deficient sample set")

    resid = times - design @ coef
    rss = float(resid @ resid)
    ss_tot = float(np.sum((times - times.mean()) ** 2))
    r2 = 1.0 - rss / ss_tot if ss_tot > 0 else 1.0
    if form == "full":
        a, b, c = coef
    else:
        a, c = coef
        b = 0.0
    return ServiceTimeModel(a=float(a), b=float(b), c=float(c), form=form,
                            r_squared=r2, rss=rss)


@dataclass(frozen=True)
class SizeDistribution:
    sizes: tuple
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-9):
            raise ValueError("weights must be nonnegative and sum to 1")
        if len(set(self.sizes)) != len(self.sizes):
            raise ValueError("sizes must be distinct")


def default_size_distribution(model: ServiceTimeModel,
                              mean_target: float = MEAN_SERVICE_TARGET,
                              sizes=SUPPORTED_SIZES) -> SizeDistribution:
    """Maximum-entropy weights whose mean predicted service time hits the target.

    The weights solve w_i ∝ exp(theta * T(size_i)) with theta chosen so that
    sum(w_i * T(size_i)) == mean_target.
    """
    t = np.array([model.predict(s) for s in sizes])
    if not (t.min() < mean_target < t.max()):
        raise ValueError("mean_target outside the achievable range")

    def mean_at(theta):
        w = np.exp(theta * (t - t.max()))  # shift for numerical stability
        w /= w.sum()
        return float(w @ t) - mean_target

    theta = brentq(mean_at, -200.0, 200.0)
    w = np.exp(theta * (t - t.max()))
    w /= w.sum()
    return SizeDistribution(sizes=tuple(sizes), weights=tuple(w))


def sample_task_size(dist: SizeDistribution, rng: np.random.Generator) -> int:
    return int(rng.choice(dist.sizes, p=dist.weights))


@dataclass(frozen=True)
class WorkloadPhaseSpec:
    """One arrival-pattern phase: steady multiplier or sinusoidal modulation."""

    kind: str  # "steady" | "sinusoid"
    base_rate: float  # tasks/second
    duration: float  # seconds
    window: float = 5.0  # Poisson window length, seconds
    multiplier: float = 1.0  # steady only
    mult_min: float = 0.0  # sinusoid only
    mult_max: float = 0.0
    cycles: int = 1

    def __post_init__(self):
        if self.kind not in ("steady", "sinusoid"):
            raise ValueError(f"unknown phase kind {self.kind!r}")
        if self.duration <= 0 or self.window <= 0 or self.window > self.duration:
            raise ValueError("need 0 < window <= duration")
        if self.kind == "sinusoid":
            if not (self.mult_min < self.mult_max) or self.cycles < 1:
                raise ValueError("sinusoid needs mult_min < mult_max and cycles >= 1")

    @property
    def mean_multiplier(self) -> float:
        if self.kind == "steady":
            return self.multiplier
        return 0.5 * (self.mult_min + self.mult_max)

    @property
    def target_count(self) -> int:
        return round(self.base_rate * self.mean_multiplier * self.duration)

    def rate_integral(self, t0: float, t1: float) -> float:
        """Integral of the arrival rate over [t0, t1], t relative to phase start."""
        if self.kind == "steady":
            return self.base_rate * self.multiplier * (t1 - t0)
        mid = 0.5 * (self.mult_min + self.mult_max)
        amp = 0.5 * (self.mult_max - self.mult_min)
        omega = 2.0 * math.pi * self.cycles / self.duration
        osc = -(amp / omega) * (math.cos(omega * t1) - math.cos(omega * t0))
        return self.base_rate * (mid * (t1 - t0) + osc)


def default_phases(base_rate: float = 5.0, duration: float = 60.0,
                   window: float = 5.0) -> tuple:
    """The four-phase pattern: steady low/high, slow and fast oscillation."""
    return (
        WorkloadPhaseSpec("steady", base_rate, duration, window, multiplier=0.3),
        WorkloadPhaseSpec("steady", base_rate, duration, window, multiplier=1.5),
        WorkloadPhaseSpec("sinusoid", base_rate, duration, window,
                          mult_min=0.5, mult_max=1.5, cycles=1),
        WorkloadPhaseSpec("sinusoid", base_rate, duration, window,
                          mult_min=0.3, mult_max=1.7, cycles=4),
    )


def _window_edges(duration: float, window: float) -> list:
    edges = [i * window for i in range(int(math.ceil(duration / window)) + 1)]
    edges[-1] = duration
    if len(edges) >= 2 and edges[-1] == edges[-2]:
        edges.pop()
    return edges


def generate_phase_arrivals(phase: WorkloadPhaseSpec, phase_start: float,
                            rng: np.random.Generator) -> list:
    """Arrival instants for one phase, exactly ``phase.target_count`` of them.

    Window counts are Poisson with the analytic rate integral as mean; the
    final window absorbs the difference so the total is exact. Instants
    within a window are uniform order statistics.
    """
    target = phase.target_count
    if target <= 0:
        return []
    edges = _window_edges(phase.duration, phase.window)
    n_windows = len(edges) - 1
    counts = []
    for i in range(n_windows - 1):
        mean = phase.rate_integral(edges[i], edges[i + 1])
        counts.append(int(rng.poisson(mean)))
    last = target - sum(counts)
    if last < 0:
        # Surplus: zero the final window and trim the excess from the tail
        # of the last nonempty windows.
        counts.append(0)
        surplus = -last
        for i in range(len(counts) - 1, -1, -1):
            take = min(surplus, counts[i])
            counts[i] -= take
            surplus -= take
            if surplus == 0:
                break
    else:
        counts.append(last)

    arrivals = []
    for i, count in enumerate(counts):
        if count == 0:
            continue
        lo, hi = edges[i], edges[i + 1]
        pts = np.sort(rng.uniform(lo, hi, size=count))
        arrivals.extend(phase_start + pts)
    return arrivals


def build_episode_workload(config, dist: SizeDistribution,
                           model: ServiceTimeModel, shuffle_phases: bool,
                           rng_seed: int) -> list:
    """Full task list for one episode, sorted by arrival, ids in arrival order.

    Each phase owns a private RNG stream keyed by (seed, phase index), so
    per-phase arrival offsets are independent of phase placement.
    """
    phases = list(config.phases)
    if not phases:
        raise ValueError("config needs at least one phase")
    order = list(range(len(phases)))
    if shuffle_phases:
        shuffle_rng = np.random.default_rng([rng_seed, 10_000])
        shuffle_rng.shuffle(order)

    entries = []  # (arrival_time, phase_index)
    position_start = 0.0
    for slot, phase_idx in enumerate(order):
        phase = phases[phase_idx]
        phase_rng = np.random.default_rng([rng_seed, phase_idx])
        offsets = generate_phase_arrivals(phase, 0.0, phase_rng)
        entries.extend((position_start + t, phase_idx) for t in offsets)
        position_start += phase.duration

    entries.sort()
    size_rng = np.random.default_rng([rng_seed, 20_000])
    tasks = []
    for task_id, (arrival, phase_idx) in enumerate(entries):
        size = sample_task_size(dist, size_rng)
        service = model.predict(size)
        tasks.append(TaskSpec(
            task_id=task_id,
            arrival_time=float(arrival),
            size_px=size,
            service_time=service,
            deadline=compute_deadline(service, config.beta),
            phase_index=phase_idx,
        ))
    return tasks


WORKLOAD_COLUMNS = ("task_id", "arrival_time", "size_px", "service_time",
                    "deadline", "phase_index")


def write_workload_csv(tasks, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WORKLOAD_COLUMNS)
        for t in tasks:
            writer.writerow((t.task_id, repr(t.arrival_time), t.size_px,
                             repr(t.service_time), repr(t.deadline), t.phase_index))


def read_workload_csv(path) -> list:
    tasks = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            tasks.append(TaskSpec(
                task_id=int(row["task_id"]),
                arrival_time=float(row["arrival_time"]),
                size_px=int(row["size_px"]),
                service_time=float(row["service_time"]),
                deadline=float(row["deadline"]),
                phase_index=int(row["phase_index"]),
            ))
    return tasks
