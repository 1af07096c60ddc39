"""
Async trial executor.

Trials are plain picklable callables. With one worker they run inline on the
event loop thread; with more they are dispatched to a process pool through
run_in_executor. Results always come back in submission order.
"""
import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

logger = logging.getLogger(__name__)


class TrialRunner:
    def __init__(self, workers: int = 1, plugin: Any = None):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.plugin = plugin
        self._executor: Optional[ProcessPoolExecutor] = None

    def _pool(self) -> ProcessPoolExecutor:
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
            logger.debug("Started process pool with %d workers", self.workers)
        return self._executor

    async def map(self, fn: Callable[..., Any], task: Any, trials: Iterable[int]) -> List[Any]:
        """Run fn(task, trial) for every trial index, ordered like `trials`."""
        trials = list(trials)
        if self.workers == 1:
            return [fn(task, trial) for trial in trials]
        loop = asyncio.get_running_loop()
        executor = self._pool()
        futures = [loop.run_in_executor(executor, fn, task, trial) for trial in trials]
        return list(await asyncio.gather(*futures))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    async def __aenter__(self) -> "TrialRunner":
        return self

    async def __aexit__(self, *exc_info) -> None:
        self.close()


__all__ = ["TrialRunner"]
