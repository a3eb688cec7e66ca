"""Fan-out of sweep points and simulation chunks over a worker pool."""

import asyncio
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Optional, Sequence

from .cache import ResultCache
from .config import RunConfig
from . import experiments
from .simulator import RunStats

logger = logging.getLogger(__name__)

WORKERS_ENV = "ALOHACALC_WORKERS"


@dataclass
class RunProgress:
    """Progress information for a sweep."""
    stage: str  # 'de', 'sim', 'admit', 'done'
    current: int = 0
    total: int = 0
    message: str = ''


def workers_from_env(default: int = 1) -> int:
    """Worker count from ALOHACALC_WORKERS, falling back to `default`."""
    value = os.environ.get(WORKERS_ENV)
    if not value:
        return default
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {value!r}")
    if workers < 1:
        raise ValueError(f"{WORKERS_ENV} must be at least 1, got {workers}")
    return workers


class ExperimentRunner:
    """Runs the work items of a command, in order of submission, on up to `workers` processes."""

    def __init__(
        self,
        config: RunConfig,
        workers: int = 1,
        progress_callback: Optional[Callable[[RunProgress], None]] = None,
        cache: Optional[ResultCache] = None,
    ):
        """
        Initialize the runner.

        Args:
            config: Validated run config
            workers: Maximum number of items computed at once; 1 runs inline
            progress_callback: Callback function for progress updates
            cache: Result cache, or None to always recompute
        """
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.config = config
        self.workers = workers
        self.progress_callback = progress_callback
        self.cache = cache

    def _report_progress(self, stage: str, current: int = 0, total: int = 0, message: str = ''):
        """Report progress to the callback."""
        if self.progress_callback:
            self.progress_callback(RunProgress(stage, current, total, message))

    async def _map(
        self,
        stage: str,
        func: Callable[..., Any],
        items: Sequence[tuple],
        keys: Sequence[Any],
        labels: Sequence[str],
    ) -> list[Any]:
        """
        Compute func(config, *item) for every item, consulting the cache first.

        Results come back in item order whatever order they finish in.
        """
        total = len(items)
        done = 0
        semaphore = asyncio.Semaphore(self.workers)
        loop = asyncio.get_running_loop()
        executor: Optional[Executor] = ProcessPoolExecutor(self.workers) if self.workers > 1 else None

        async def run_item(item: tuple, key: Any, label: str) -> Any:
            nonlocal done
            result = self.cache.get(key) if self.cache else None
            if result is None:
                async with semaphore:
                    call = partial(func, self.config, *item)
                    if executor is None:
                        result = call()
                    else:
                        result = await loop.run_in_executor(executor, call)
                if self.cache:
                    self.cache.set(key, result, label)
            done += 1
            self._report_progress(stage, current=done, total=total, message=label)
            return result

        try:
            results = await asyncio.gather(
                *[run_item(item, key, label) for item, key, label in zip(items, keys, labels)]
            )
        finally:
            if executor is not None:
                executor.shutdown()
        self._report_progress("done", current=total, total=total, message=f"Finished {total} {stage} items")
        return results

    async def run_de(self, values: Optional[Sequence[int]] = None) -> list[list[float]]:
        """Density-evolution error probabilities per class at each sweep value."""
        values = list(values if values is not None else experiments.sweep_values(self.config))
        logger.info("Density evolution over %d sweep points", len(values))
        return await self._map(
            "de",
            experiments.de_point,
            [(v,) for v in values],
            [experiments.de_inputs(self.config, v) for v in values],
            [f"DE at {v} users" for v in values],
        )

    async def run_sim(self, values: Optional[Sequence[int]] = None) -> list[RunStats]:
        """
        Simulated statistics at each sweep value.

        Runs are split into fixed chunks, so the totals are the same for any
        worker count.
        """
        values = list(values if values is not None else experiments.sweep_values(self.config))
        chunks = experiments.sim_chunks(self.config)
        items = [(v, start, stop) for v in values for start, stop in chunks]
        logger.info("Simulating %d sweep points in %d chunks", len(values), len(items))

        results = await self._map(
            "sim",
            experiments.sim_chunk,
            items,
            [experiments.sim_inputs(self.config, *item) for item in items],
            [f"{v} users, runs {start}-{stop - 1}" for v, start, stop in items],
        )

        per_value = []
        for i in range(len(values)):
            parts = results[i * len(chunks) : (i + 1) * len(chunks)]
            total = parts[0]
            for part in parts[1:]:
                total = total + part
            per_value.append(total)
        return per_value

    async def run_admit(self) -> tuple[int, float]:
        """Bisection for the admissible user count, one DE point at a time."""
        evaluations = 0

        def evaluate(value: int) -> list[float]:
            nonlocal evaluations
            evaluations += 1
            key = experiments.de_inputs(self.config, value)
            errors = self.cache.get(key) if self.cache else None
            if errors is None:
                errors = experiments.de_point(self.config, value)
                if self.cache:
                    self.cache.set(key, errors, f"DE at {value} users")
            self._report_progress("admit", current=evaluations, message=f"{value} users")
            return errors

        return experiments.admit(self.config, evaluate)
