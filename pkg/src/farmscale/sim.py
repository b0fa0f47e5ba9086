"""Virtual-time discrete-event simulator of the Emitter/Worker/Collector farm.

Events execute in time order with a fixed tie-break (completion < arrival <
worker-ready, then ascending id) so that identical (config, workload, seed)
always produce bitwise-identical traces. The emitter and collector are
zero-delay: arriving tasks land in the worker queue instantly and completed
tasks pass through the result/output queues instantly, so q_in, q_res and
q_out read 0 at step boundaries while their counters advance.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

# event kind priorities (tie-break after time)
_COMPLETION = 0
_ARRIVAL = 1
_WORKER_READY = 2

STARTING = "starting"
IDLE = "idle"
BUSY = "busy"


@dataclass
class WorkerState:
    worker_id: int
    status: str  # starting | idle | busy
    draining: bool = False
    ready_at: float = 0.0
    busy_until: float = 0.0
    task_id: int = -1


@dataclass
class StepStats:
    arrived: int = 0
    completed: int = 0
    hits: int = 0
    completions: list = field(default_factory=list)  # (task_id, service, latency, met)
    workers_effective: int = 0


@dataclass
class Snapshot:
    q_in: int
    q_work: int
    q_res: int
    q_out: int
    workers_effective: int
    workers_busy: int
    workers_starting: int
    workers_draining: int
    enqueued_total: int
    completed_total: int


class ConservationError(AssertionError):
    pass


class FarmSim:
    """Single-owner event-driven farm state; one instance per episode."""

    def __init__(self, config, rng: np.random.Generator, validate: bool = False,
                 trace: bool = False):
        self.config = config
        self.rng = rng
        self.validate = validate
        self.clock = 0.0
        self.q_work = deque()
        self.workers: dict[int, WorkerState] = {}
        self.enqueued_total = 0
        self.completed_total = 0
        self.hits_total = 0
        self.completion_records = []  # (task_id, completion_time, met)
        self._events = []  # (time, kind, id, payload)
        self._pending_arrivals = 0
        self._task_ids = set()
        self._next_worker_id = 0
        self._last_scheduled_ready = 0.0
        self._stats = StepStats()
        self.trace = [] if trace else None

        if getattr(config, "warm_start", False):
            # Initial pool brought up before the episode clock starts, the
            # way a farm deployment completes its startup handshake before
            # the emitter opens the stream.  Only mid-episode scale-ups pay
            # the sequential startup latency.
            for _ in range(config.n_init):
                wid = self._next_worker_id
                self._next_worker_id += 1
                self.workers[wid] = WorkerState(wid, IDLE, ready_at=0.0)
        else:
            for _ in range(config.n_init):
                self._schedule_start()

    # -- scheduling helpers -------------------------------------------------

    def _schedule_start(self):
        lo, hi = self.config.scale_up_latency
        base = max(self.clock, self._last_scheduled_ready)
        ready_at = base + self.rng.uniform(lo, hi)
        wid = self._next_worker_id
        self._next_worker_id += 1
        self.workers[wid] = WorkerState(wid, STARTING, ready_at=ready_at)
        self._last_scheduled_ready = ready_at
        heapq.heappush(self._events, (ready_at, _WORKER_READY, wid, None))
        return wid

    def _committed(self) -> int:
        return sum(1 for w in self.workers.values() if not w.draining)

    def _record(self, kind, task_id=-1, worker_id=-1):
        if self.trace is not None:
            self.trace.append((self.clock, kind, task_id, worker_id))

    # -- public operations --------------------------------------------------

    def inject_tasks(self, tasks):
        """Schedule arrival events; tasks must be sorted by arrival time."""
        for task in tasks:
            if task.task_id in self._task_ids:
                raise ValueError(f"duplicate task_id {task.task_id}")
            self._task_ids.add(task.task_id)
            self._pending_arrivals += 1
            heapq.heappush(self._events,
                           (task.arrival_time, _ARRIVAL, task.task_id, task))

    def request_scale(self, delta: int) -> int:
        """Apply a unit scaling request, clipped to pool bounds.

        Scale-up queues a new worker behind any pending start (sequential
        startup). Scale-down drains the most-recently-started worker: a
        pending start is cancelled, an idle worker exits now, a busy worker
        exits when its task completes.
        """
        if abs(delta) > 1:
            raise ValueError("scaling actions are unit steps")
        committed = self._committed()
        applied = max(min(delta, self.config.n_max - committed),
                      self.config.n_min - committed)
        applied = max(-1, min(1, applied))
        if applied > 0:
            wid = self._schedule_start()
            self._record("scale_up", worker_id=wid)
        elif applied < 0:
            victim = max((w for w in self.workers.values() if not w.draining),
                         key=lambda w: w.worker_id)
            if victim.status == STARTING:
                del self.workers[victim.worker_id]  # ready event becomes stale
                self._last_scheduled_ready = max(
                    (w.ready_at for w in self.workers.values()
                     if w.status == STARTING), default=0.0)
            elif victim.status == IDLE:
                del self.workers[victim.worker_id]
            else:
                victim.draining = True
            self._record("scale_down", worker_id=victim.worker_id)
        return applied

    def advance(self, dt: float) -> StepStats:
        """Execute all events in (clock, clock + dt] and return window stats."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        end = self.clock + dt
        self._stats = StepStats()
        while self._events and self._events[0][0] <= end:
            time, kind, eid, payload = heapq.heappop(self._events)
            self.clock = time
            if kind == _ARRIVAL:
                self._on_arrival(payload)
            elif kind == _COMPLETION:
                self._on_completion(eid, payload)
            else:
                self._on_worker_ready(eid)
            if self.validate:
                self._check_conservation()
        self.clock = end
        self._stats.workers_effective = self.snapshot().workers_effective
        return self._stats

    def snapshot(self) -> Snapshot:
        busy = sum(1 for w in self.workers.values() if w.status == BUSY)
        starting = sum(1 for w in self.workers.values() if w.status == STARTING)
        draining = sum(1 for w in self.workers.values() if w.draining)
        effective = sum(1 for w in self.workers.values()
                        if w.status in (IDLE, BUSY) and not w.draining)
        return Snapshot(
            q_in=0, q_work=len(self.q_work), q_res=0, q_out=0,
            workers_effective=effective, workers_busy=busy,
            workers_starting=starting, workers_draining=draining,
            enqueued_total=self.enqueued_total,
            completed_total=self.completed_total,
        )

    @property
    def pending_arrivals(self) -> int:
        return self._pending_arrivals

    # -- event handlers -----------------------------------------------------

    def _on_arrival(self, task):
        self.q_work.append(task)
        self._pending_arrivals -= 1
        self.enqueued_total += 1
        self._stats.arrived += 1
        self._record("arrival", task_id=task.task_id)
        self._dispatch()

    def _on_completion(self, worker_id, task):
        worker = self.workers.get(worker_id)
        if worker is None or worker.task_id != task.task_id:
            return  # stale event from an exited worker
        self.completed_total += 1
        met = self.clock - task.arrival_time <= task.deadline
        if met:
            self.hits_total += 1
        self.completion_records.append((task.task_id, self.clock, met))
        self._stats.completed += 1
        self._stats.hits += int(met)
        self._stats.completions.append(
            (task.task_id, task.service_time, self.clock - task.arrival_time, met))
        self._record("completion", task_id=task.task_id, worker_id=worker_id)
        if worker.draining:
            del self.workers[worker_id]
            self._record("worker_exit", worker_id=worker_id)
        else:
            worker.status = IDLE
            worker.task_id = -1
            self._dispatch()

    def _on_worker_ready(self, worker_id):
        worker = self.workers.get(worker_id)
        if worker is None or worker.status != STARTING:
            return  # cancelled by a scale-down before becoming ready
        worker.status = IDLE
        self._record("worker_ready", worker_id=worker_id)
        self._dispatch()

    def _dispatch(self):
        while self.q_work:
            idle = [w for w in self.workers.values()
                    if w.status == IDLE and not w.draining]
            if not idle:
                return
            worker = min(idle, key=lambda w: w.worker_id)
            task = self.q_work.popleft()
            worker.status = BUSY
            worker.task_id = task.task_id
            worker.busy_until = self.clock + task.service_time
            heapq.heappush(self._events,
                           (worker.busy_until, _COMPLETION, worker.worker_id, task))
            self._record("dispatch", task_id=task.task_id, worker_id=worker.worker_id)

    def _check_conservation(self):
        busy = sum(1 for w in self.workers.values() if w.status == BUSY)
        expected = len(self.q_work) + busy + self.completed_total
        if self.enqueued_total != expected:
            raise ConservationError(
                f"enqueued {self.enqueued_total} != queued {len(self.q_work)}"
                f" + busy {busy} + completed {self.completed_total}"
                f" at t={self.clock}")


def write_trace_csv(trace, path):
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("time", "event_kind", "task_id", "worker_id"))
        writer.writerows(trace)


@dataclass(frozen=True)
class StaticRunResult:
    n_workers: int
    runtime: float
    init_overhead: float


def static_run(config, workload, n_fixed: int, rng_seed: int = 0) -> StaticRunResult:
    """Run the whole workload with a fixed pool of n_fixed workers."""
    if n_fixed < 1:
        raise ValueError("n_fixed must be >= 1")
    from dataclasses import replace
    cfg = replace(config, n_min=n_fixed, n_max=n_fixed, n_init=n_fixed,
                  warm_start=False)
    sim = FarmSim(cfg, np.random.default_rng([rng_seed, 30_000]))
    init_overhead = max(w.ready_at for w in sim.workers.values())
    sim.inject_tasks(workload)
    total = len(workload)
    while sim.completed_total < total:
        sim.advance(60.0)
    first_arrival = min(t.arrival_time for t in workload)
    last_completion = max(t for _, t, _ in sim.completion_records)
    return StaticRunResult(n_fixed, last_completion - first_arrival, init_overhead)


def static_scaling_experiment(config, workload, pool_sizes, rng_seed: int = 0):
    """Static runs over several pool sizes plus speedups relative to n=1."""
    results = {n: static_run(config, workload, n, rng_seed) for n in pool_sizes}
    base = results.get(1, static_run(config, workload, 1, rng_seed))
    speedups = {n: base.runtime / r.runtime for n, r in results.items()}
    return results, speedups
