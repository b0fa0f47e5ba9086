"""Episode summaries and the two pricing models."""

import pytest
from hypothesis import given, strategies as st

from farmscale.core import (EpisodeLog, Observation, RewardConfig, StepRecord,
                            TaskRecord)
from farmscale.env import FarmEnv
from farmscale.metrics import (CostConfig, aggregate, cost_paygo, cost_sub,
                               summarize_episode)
from tests.conftest import constant_service_tasks, single_phase_config


def step(k, n_workers, applied_delta=0, arrived=0, completed=0, hits=0,
         reward=0.0):
    obs = Observation(q_in=0, q_work=0, q_res=0, q_out=0, n_workers=n_workers,
                      t_proc_avg=0.0, t_proc_max=0.0, arrival_rate=0.0,
                      qos_step=1.0)
    return StepRecord(step=k, observation=obs, action=applied_delta,
                      applied_delta=applied_delta, reward=reward,
                      arrived=arrived, completed=completed, hits=hits)


class TestCostPaygo:
    CFG = CostConfig(c_w=1.0, c_scale=0.5)

    def test_hand_example(self):
        # N = [2,2,3], T_step = 1: usage 7, one scale event
        assert cost_paygo([2, 2, 3], 1.0, self.CFG) == pytest.approx(7.5,
                                                                     abs=1e-9)

    def test_constant_pool_has_no_scaling_charge(self):
        cfg = CostConfig(c_w=1.0, c_scale=123.0)
        assert cost_paygo([5] * 10, 2.0, cfg) == pytest.approx(100.0, abs=1e-9)

    def test_zero_worker_tariff_counts_only_events(self):
        cfg = CostConfig(c_w=0.0, c_scale=2.0)
        assert cost_paygo([1, 2, 2, 3], 1.0, cfg) == pytest.approx(4.0,
                                                                   abs=1e-9)

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            cost_paygo([], 1.0, self.CFG)


class TestCostSub:
    def test_hand_example(self):
        cfg = CostConfig(c_sub=1.0, c_burst=2.0, c_scale=0.0, n_sub=3)
        # reserved: 3 * 2s = 6; burst: max(0, 4-3) * 1s * 2 = 2
        assert cost_sub([2, 4], 1.0, cfg) == pytest.approx(8.0, abs=1e-9)

    def test_no_burst_when_reserved_covers_peak(self):
        cfg = CostConfig(c_sub=0.7, c_burst=9.0, c_scale=0.0, n_sub=10)
        assert cost_sub([3, 5, 7], 2.0, cfg) == pytest.approx(
            0.7 * 10 * 6.0, abs=1e-9)

    def test_degenerates_to_paygo_usage(self):
        cfg = CostConfig(c_w=1.5, c_sub=0.0, c_burst=1.5, c_scale=0.0,
                         n_sub=0)
        series = [1, 4, 2, 6]
        assert cost_sub(series, 3.0, cfg) == pytest.approx(
            cost_paygo(series, 3.0, CostConfig(c_w=1.5, c_scale=0.0)),
            abs=1e-9)

    @given(series=st.lists(st.integers(min_value=1, max_value=20), min_size=2,
                           max_size=30),
           bump=st.integers(min_value=0, max_value=len("xxxxx")))
    def test_monotone_in_pool_size(self, series, bump):
        # usage monotonicity; c_scale = 0 because raising one N_k can
        # remove a reconfiguration event and with it the per-event charge
        cfg = CostConfig(c_scale=0.0)
        idx = bump % len(series)
        raised = list(series)
        raised[idx] += 1
        for fn in (cost_paygo, cost_sub):
            assert fn(raised, 8.0, cfg) >= fn(series, 8.0, cfg) - 1e-12


class TestSummarize:
    def _config(self):
        return single_phase_config(2.0, 40.0, n_init=2, warm_start=True)

    def test_hand_built_counters(self):
        cfg = self._config()
        log = EpisodeLog(n_tasks=0)
        for k, (n, d) in enumerate(zip([2, 2, 3], [0, 0, 1])):
            log.add_step(step(k, n, applied_delta=d, reward=1.0))
        summary = summarize_episode(log, cfg)
        assert summary.n_mean == pytest.approx(7 / 3)
        assert summary.n_scale == 1
        assert summary.no_ops == 2
        assert summary.n_scale + summary.no_ops == summary.steps
        assert summary.total_reward == pytest.approx(3.0)

    def test_all_met_gives_unit_qos(self):
        cfg = self._config()
        log = EpisodeLog(n_tasks=2)
        log.add_step(step(0, 2, completed=2, hits=2, arrived=2))
        for i in range(2):
            log.add_task(TaskRecord(task_id=i, arrival=0.1, size=512,
                                    service=0.05, deadline=0.1,
                                    completion=0.2, met=True, phase_index=0))
        assert summarize_episode(log, cfg).final_qos == 1.0

    def test_unfinished_tasks_count_as_missed(self):
        cfg = self._config()
        log = EpisodeLog(n_tasks=2)
        log.add_step(step(0, 2, completed=1, hits=1, arrived=2))
        log.add_task(TaskRecord(task_id=0, arrival=0.1, size=512,
                                service=0.05, deadline=0.1, completion=0.2,
                                met=True, phase_index=0))
        log.add_task(TaskRecord(task_id=1, arrival=0.2, size=512,
                                service=0.05, deadline=0.1,
                                completion=float("nan"), met=False,
                                phase_index=0))
        assert summarize_episode(log, cfg).final_qos == pytest.approx(0.5)

    def test_empty_log_rejected(self):
        with pytest.raises(ValueError):
            summarize_episode(EpisodeLog(), self._config())

    def test_per_phase_matches_direct_recount(self, ep_config, rw_config,
                                              model_and_dist):
        model, dist = model_and_dist
        from farmscale.workload import build_episode_workload
        env = FarmEnv(ep_config, rw_config)
        tasks = build_episode_workload(ep_config, dist, model, False, 5)
        env.reset(tasks, seed=5)
        done = False
        while not done:
            _, _, done, _ = env.step(1)
        summary = summarize_episode(env.log, ep_config)
        for idx, phase in enumerate(summary.per_phase):
            members = [t for t in env.log.tasks if t.phase_index == idx]
            assert phase.emitted == len(members)
            expected = sum(t.met for t in members) / len(members)
            assert phase.qos == pytest.approx(expected)
        assert sum(p.emitted for p in summary.per_phase) == len(tasks)

    def test_episode_summary_roundtrips_as_dict(self):
        cfg = self._config()
        log = EpisodeLog(n_tasks=0)
        log.add_step(step(0, 2))
        d = summarize_episode(log, cfg).as_dict()
        assert d["mean_workers"] == 2.0
        assert "final_qos" in d and "per_phase" in d


class TestAggregate:
    def test_mean_and_population_std(self):
        mean, std = aggregate([1.0, 2.0, 3.0, 4.0])
        assert mean == pytest.approx(2.5)
        assert std == pytest.approx(1.11803398875)

    def test_single_value(self):
        mean, std = aggregate([7.0])
        assert mean == 7.0
        assert std == 0.0
