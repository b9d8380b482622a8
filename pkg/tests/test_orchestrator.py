import math

import numpy as np
import pytest

from wavicle_sim.orchestrator import (
    CHUNK_SIZE,
    EXCHANGE_MIX,
    SHARED_MIX,
    Orchestrator,
    PointPlan,
    simulate_chunk,
)
from wavicle_sim.physics.estimator import joint_average
from wavicle_sim.physics.wavicle import ChannelKind, Statistics


def make_plan(spin_sources, detector, trials, **kwargs):
    values = dict(
        scenario="epr[0]",
        sources=spin_sources,
        det_a=detector,
        det_b=detector,
        stats=Statistics.FERMION,
        trials=trials,
        seed=77,
        stream_id=0,
    )
    values.update(kwargs)
    return PointPlan(**values)


class TestPointPlan:

    def test_chunks_cover_all_trials(self, spin_sources, spin_detector):
        plan = make_plan(spin_sources, spin_detector(math.pi / 2), 2 * CHUNK_SIZE + 10)
        chunks = plan.chunks()
        assert [index for index, _, _ in chunks] == [0, 1, 2]
        assert [first for _, first, _ in chunks] == [0, CHUNK_SIZE, 2 * CHUNK_SIZE]
        assert sum(size for _, _, size in chunks) == plan.trials

    def test_simulate_chunk_is_pure(self, spin_sources, spin_detector):
        plan = make_plan(spin_sources, spin_detector(math.pi / 2), 5000)
        first = joint_average(simulate_chunk(plan, 3, 0, 5000).accumulator)
        second = joint_average(simulate_chunk(plan, 3, 0, 5000).accumulator)
        assert first == second

    def test_exchange_mix_routes_only_exchange(self, spin_sources, spin_detector):
        plan = make_plan(spin_sources, spin_detector(math.pi / 2), 4000, channel_mix=EXCHANGE_MIX, collect_readings=True)
        result = simulate_chunk(plan, 0, 0, 4000)
        assert result.accumulator.channels[ChannelKind.DIAG_UV].n == 0
        assert result.accumulator.channels[ChannelKind.DIAG_VU].n == 0
        assert set(np.unique(result.readings.kinds)) == {2, 3}


class TestOrchestrator:

    def test_worker_count_does_not_change_results(self, spin_sources, spin_detector):
        plans = [
            make_plan(spin_sources, spin_detector(math.pi / 2, 0.0), CHUNK_SIZE + 500, stream_id=0),
            make_plan(spin_sources, spin_detector(math.pi / 3, 1.0), 3000, scenario="epr[1]", stream_id=1),
        ]
        single = Orchestrator(workers=1).run_sync(plans)
        several = Orchestrator(workers=4).run_sync(plans)
        for one, many in zip(single, several):
            assert joint_average(one.accumulator) == joint_average(many.accumulator)

    def test_results_in_plan_order(self, spin_sources, spin_detector):
        plans = [make_plan(spin_sources, spin_detector(0.1 * i), 1000, scenario=f"p{i}", stream_id=i) for i in range(5)]
        results = Orchestrator(workers=3).run_sync(plans)
        assert [result.plan.scenario for result in results] == [f"p{i}" for i in range(5)]
        assert all(result.accumulator.n == 1000 for result in results)

    def test_progress_callback(self, spin_sources, spin_detector):
        calls = []
        plan = make_plan(spin_sources, spin_detector(1.0), 2 * CHUNK_SIZE)
        Orchestrator(workers=2, progress_callback=lambda done, total: calls.append((done, total))).run_sync([plan])
        assert len(calls) == 2
        assert calls[-1] == (2, 2)

    def test_collected_readings_concatenate_in_chunk_order(self, spin_sources, spin_detector):
        plan = make_plan(spin_sources, spin_detector(1.0), CHUNK_SIZE + 7, collect_readings=True)
        result = Orchestrator(workers=2).run_sync([plan])[0]
        assert result.readings.a.shape == (CHUNK_SIZE + 7,)
        first = simulate_chunk(plan, 0, 0, CHUNK_SIZE)
        np.testing.assert_array_equal(result.readings.a[:CHUNK_SIZE], first.readings.a)

    def test_shared_mix_epr_point(self, spin_sources, spin_detector):
        plan = make_plan(spin_sources, spin_detector(math.pi / 2), 40_000, channel_mix=SHARED_MIX)
        estimate = joint_average(Orchestrator().run_sync([plan])[0].accumulator)
        assert abs(estimate.mean_ab.value + 2.0) < 4 * estimate.mean_ab.stderr
        assert abs(estimate.mean_a.value) < 4 * estimate.mean_a.stderr
