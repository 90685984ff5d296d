"""Worker pool for the per-round parallel-for over clients."""
import logging
import time
from collections.abc import Callable, Mapping
from concurrent.futures import Future, ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from typing import TypeVar

from flmrsim.errors import FederationError

logger = logging.getLogger(__name__)

R = TypeVar("R")


class ClientTaskManager:
    """Runs one round's client jobs and tracks their progress and timing.

    Results always come back keyed by client id and are collected in ascending
    id order, so the caller sees the same outcome for any worker count.
    """

    def __init__(self, workers: int = 1, default_timeout: float | None = None):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.default_timeout = default_timeout
        self._executor: ThreadPoolExecutor | None = None
        self._progress: dict[int, float] = {}
        self._start_times: dict[int, float] = {}
        self._elapsed: dict[int, float] = {}

    def __enter__(self) -> "ClientTaskManager":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.shutdown()

    def shutdown(self) -> None:
        """Release the worker threads."""
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None

    def update_progress(self, client_id: int, progress: float) -> None:
        """Record client progress (0-100)."""
        self._progress[client_id] = min(max(progress, 0.0), 100.0)

    def get_progress(self, client_id: int) -> float:
        return self._progress.get(client_id, 0.0)

    def progress_callback(self, client_id: int) -> Callable[[float], None]:
        """Callable a job uses to report the completed fraction of its work."""
        return lambda fraction: self.update_progress(client_id, 100.0 * fraction)

    def get_elapsed_time(self, client_id: int) -> float | None:
        """Seconds the client's last job took, or has taken so far."""
        if client_id in self._elapsed:
            return self._elapsed[client_id]
        start = self._start_times.get(client_id)
        return None if start is None else time.perf_counter() - start

    def _timed(self, client_id: int, job: Callable[[], R]) -> R:
        self._start_times[client_id] = time.perf_counter()
        try:
            return job()
        finally:
            self._elapsed[client_id] = time.perf_counter() - self._start_times[client_id]

    def run_round(
        self,
        round_index: int,
        jobs: Mapping[int, Callable[[], R]],
        timeout: float | None = None,
    ) -> dict[int, R]:
        """Execute every job; the first failing client (by id) aborts the round."""
        self.cleanup_round()
        for client_id in jobs:
            self._progress[client_id] = 0.0
        order = sorted(jobs)

        if self.workers == 1:
            results: dict[int, R] = {}
            for client_id in order:
                try:
                    results[client_id] = self._timed(client_id, jobs[client_id])
                except Exception as exc:
                    self._fail(client_id, round_index, exc)
                self.update_progress(client_id, 100.0)
            return results

        if self._executor is None:
            self._executor = ThreadPoolExecutor(
                max_workers=self.workers, thread_name_prefix="flmr-client"
            )
        futures: dict[int, Future[R]] = {
            cid: self._executor.submit(self._timed, cid, jobs[cid]) for cid in order
        }
        deadline = None
        limit = timeout if timeout is not None else self.default_timeout
        if limit is not None:
            deadline = time.perf_counter() + limit

        results = {}
        try:
            for client_id in order:
                remaining = None if deadline is None else max(deadline - time.perf_counter(), 0.0)
                try:
                    results[client_id] = futures[client_id].result(timeout=remaining)
                except FutureTimeout:
                    self._fail(client_id, round_index, TimeoutError(f"no result after {limit}s"))
                except Exception as exc:
                    self._fail(client_id, round_index, exc)
                self.update_progress(client_id, 100.0)
        finally:
            for future in futures.values():
                future.cancel()
        return results

    def _fail(self, client_id: int, round_index: int, exc: BaseException) -> None:
        logger.error("Client %d failed in round %d: %s", client_id, round_index, exc)
        raise FederationError(client_id, round_index, exc) from exc

    def cleanup_round(self) -> None:
        """Forget per-round bookkeeping."""
        self._progress.clear()
        self._start_times.clear()
        self._elapsed.clear()
