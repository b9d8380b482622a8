"""Async orchestrator for parallel Monte Carlo runs."""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .physics.estimator import Accumulator
from .physics.sampler import EXCHANGE_KAPPA, DetectorModel, SamplingMode, sample_batch
from .physics.wavicle import (
    SourceSpec,
    Statistics,
    choose_channels,
    draw_event_batch,
    enumerate_channels,
    phase_difference,
)
from .utils.rng import RngStream

logger = logging.getLogger(__name__)

CHUNK_SIZE = 65536

SHARED_MIX = (0.25, 0.25, 0.25, 0.25)
SEPARATED_MIX = (1.0, 0.0, 0.0, 0.0)
DIAGONAL_MIX = (0.5, 0.5, 0.0, 0.0)
EXCHANGE_MIX = (0.0, 0.0, 0.5, 0.5)


@dataclass(frozen=True)
class PointPlan:
    """One scan point: sources, detectors and how its trials are routed."""

    scenario: str
    sources: tuple[SourceSpec, SourceSpec]
    det_a: DetectorModel
    det_b: DetectorModel
    stats: Statistics
    trials: int
    seed: int
    stream_id: int
    channel_mix: tuple[float, float, float, float] = SHARED_MIX
    mode: SamplingMode = SamplingMode.EIGENVALUE
    kappa: float = EXCHANGE_KAPPA
    time_step: float = 0.0
    collect_readings: bool = False

    def chunks(self) -> list[tuple[int, int, int]]:
        """(chunk index, first trial id, size) covering all trials."""
        return [
            (index, first, min(CHUNK_SIZE, self.trials - first))
            for index, first in enumerate(range(0, self.trials, CHUNK_SIZE))
        ]


@dataclass
class ReadingBatch:
    """Raw readings kept for distribution analyses."""

    kinds: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def concatenate(cls, batches: list["ReadingBatch"]) -> "ReadingBatch":
        return cls(
            kinds=np.concatenate([batch.kinds for batch in batches]),
            a=np.concatenate([batch.a for batch in batches]),
            b=np.concatenate([batch.b for batch in batches]),
        )


@dataclass
class PointResult:
    plan: PointPlan
    accumulator: Accumulator
    readings: ReadingBatch | None = None


def simulate_chunk(plan: PointPlan, index: int, first_trial: int, size: int) -> PointResult:
    """Run one chunk of trials. Pure function of (plan, index)."""
    rng = RngStream(plan.seed, plan.stream_id, index).generator()
    events = draw_event_batch(rng, first_trial, size, plan.time_step)
    kinds = choose_channels(rng, size, plan.channel_mix)
    phases = phase_difference(events, plan.sources)
    a, b = sample_batch(rng, kinds, phases, plan.det_a, plan.det_b, plan.mode, plan.kappa)

    accumulator = Accumulator(scenario=plan.scenario)
    for channel, probability in zip(enumerate_channels(plan.sources, plan.stats), plan.channel_mix):
        if probability == 0.0:
            continue
        mask = kinds == channel.kind.index
        accumulator.accumulate_batch(
            channel.kind,
            a[mask],
            b[mask],
            weight=channel.weight / probability,
            weight_a=channel.weight_a / probability,
            weight_b=channel.weight_b / probability,
        )

    readings = ReadingBatch(kinds=kinds, a=a, b=b) if plan.collect_readings else None
    return PointResult(plan=plan, accumulator=accumulator, readings=readings)


class Orchestrator:
    """Orchestrate chunked Monte Carlo runs across worker threads."""

    def __init__(
        self,
        workers: int = 4,
        progress_callback: Callable[[int, int], None] | None = None,
    ):
        """
        Initialize the orchestrator.

        Args:
            workers: Maximum number of chunks simulated concurrently
            progress_callback: Optional callback for progress updates (completed chunks, total chunks)
        """
        self.workers = workers
        self.progress_callback = progress_callback

    async def run(self, plans: list[PointPlan]) -> list[PointResult]:
        """
        Simulate every plan and merge its chunks in chunk order.

        Args:
            plans: Scan points to simulate

        Returns:
            One PointResult per plan, in plan order
        """
        jobs = [(plan_index, chunk) for plan_index, plan in enumerate(plans) for chunk in plan.chunks()]
        logger.info("simulating %d points as %d chunks on %d workers", len(plans), len(jobs), self.workers)

        loop = asyncio.get_running_loop()
        semaphore = asyncio.Semaphore(self.workers)
        completed = 0

        with ThreadPoolExecutor(max_workers=self.workers) as executor:

            async def run_with_semaphore(plan_index: int, chunk: tuple[int, int, int]) -> PointResult:
                nonlocal completed
                async with semaphore:
                    try:
                        return await loop.run_in_executor(executor, simulate_chunk, plans[plan_index], *chunk)
                    finally:
                        completed += 1
                        if self.progress_callback:
                            self.progress_callback(completed, len(jobs))

            chunk_results = await asyncio.gather(*(run_with_semaphore(i, chunk) for i, chunk in jobs))

        grouped: list[list[PointResult]] = [[] for _ in plans]
        for (plan_index, _), result in zip(jobs, chunk_results):
            grouped[plan_index].append(result)

        return [self._merge(plan, parts) for plan, parts in zip(plans, grouped)]

    @staticmethod
    def _merge(plan: PointPlan, parts: list[PointResult]) -> PointResult:
        accumulator = Accumulator(scenario=plan.scenario)
        for part in parts:
            accumulator = accumulator.merge(part.accumulator)
        readings = None
        if plan.collect_readings and parts:
            readings = ReadingBatch.concatenate([part.readings for part in parts])
        logger.debug("merged %d chunks for %s", len(parts), plan.scenario)
        return PointResult(plan=plan, accumulator=accumulator, readings=readings)

    def run_sync(self, plans: list[PointPlan]) -> list[PointResult]:
        """
        Synchronous wrapper for run().

        Args:
            plans: Scan points to simulate

        Returns:
            One PointResult per plan, in plan order
        """
        return asyncio.run(self.run(plans))
