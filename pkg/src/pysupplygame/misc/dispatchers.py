import logging
import threading
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from typing import Any, Callable, Dict, List, Union

from pysupplygame import exceptions
from pysupplygame.misc.events import RunEvents
from pysupplygame.misc.routers import Router

logger = logging.getLogger(__name__)


class BaseDispatcher:
    _is_running: bool = False

    def __init__(self):
        self._state_lock = threading.Lock()

    def _raise_if_running(self):
        if self._is_running:
            raise exceptions.DispatcherIsRunningError()


class JobDispatcher(BaseDispatcher):
    def __init__(self, routers: Union[Router, List[Router]] = None, workers: int = 1, errors_treshold: int = 3):
        """
        Fan independent jobs out to a thread pool and report each outcome to routers.

        Every finished job triggers RunEvents.JOB_FINISHED and every failed one RunEvents.JOB_FAILED,
        with the payload built by the job's on_success / on_failure callbacks; exceptions from outside the
        package reach on_failure wrapped in JobFailedError. After errors_treshold
        consecutive failures the remaining jobs are cancelled and JobFailedError is raised.

        Args:
            routers (Router | list[Router], optional): Routers receiving job events. Defaults to none.
            workers (int, optional): Pool size. Defaults to 1.
            errors_treshold (int, optional): Consecutive failures tolerated. Defaults to 3.
        """
        super().__init__()
        if routers is None:
            routers = []
        if isinstance(routers, Router):
            routers = [routers]
        for router in routers:
            if not isinstance(router, Router):
                raise TypeError(f"Router {router} is not a valid router.")
        if workers < 1:
            raise exceptions.ConfigurationError(field='workers', reason="must be >= 1")
        self._routers = list(routers)
        self._workers = workers
        self._errors_treshold = errors_treshold
        self._jobs: Dict[Any, tuple] = {}
        self._errors = 0
        self._consecutive_errors = 0

    @property
    def errors_treshold(self) -> int:
        """The number of consecutive failed jobs after which the batch is abandoned."""
        return self._errors_treshold

    @errors_treshold.setter
    def errors_treshold(self, errors_treshold: int):
        self._errors_treshold = errors_treshold

    @property
    def errors(self) -> int:
        return self._errors

    def add_router(self, router: Router):
        self._raise_if_running()
        if router in self._routers:
            raise exceptions.DispatcherError(exception=f"router {router} already registered")
        self._routers.append(router)

    def submit(self, key: Any, job: Callable[[], Any], on_success: Callable[[Any], Any] = None, on_failure: Callable[[Exception], Any] = None):
        """
        Queue a job for the next run.

        Args:
            key (Any): Sortable job key; results are returned ordered by it.
            job (Callable): Zero-argument callable doing the work.
            on_success (Callable, optional): Maps the result to the JOB_FINISHED payload.
            on_failure (Callable, optional): Maps the exception to the JOB_FAILED payload.

        Raises:
            DispatcherIsRunningError: If called while a batch runs.
        """
        self._raise_if_running()
        if key in self._jobs:
            raise exceptions.DispatcherError(exception=f"job {key} already submitted")
        self._jobs[key] = (job, on_success, on_failure)

    def _trigger(self, event: str, payload: Any):
        if payload is None:
            return
        for router in self._routers:
            router.trigger_event(event, payload)

    def _record(self, key: Any, future: Future, results: Dict[Any, Any]):
        _, on_success, on_failure = self._jobs[key]
        try:
            result = future.result()
        except Exception as e:
            error = e if isinstance(e, exceptions.SupplyGameError) else exceptions.JobFailedError(key=key, exception=repr(e))
            self._errors += 1
            self._consecutive_errors += 1
            logger.warning("job %s failed: %s", key, error)
            self._trigger(RunEvents.JOB_FAILED, on_failure(error) if on_failure else None)
            if self._consecutive_errors >= self._errors_treshold:
                raise exceptions.JobFailedError(key=key, exception=e) from e
            return
        self._consecutive_errors = 0
        results[key] = result
        self._trigger(RunEvents.JOB_FINISHED, on_success(result) if on_success else None)

    def run(self) -> Dict[Any, Any]:
        """
        Execute every queued job and clear the queue.

        Returns:
            dict: Results of the successful jobs, ordered by job key.

        Raises:
            JobFailedError: After errors_treshold consecutive failures.
        """
        with self._state_lock:
            self._raise_if_running()
            self._is_running = True
        self._errors = 0
        self._consecutive_errors = 0
        results: Dict[Any, Any] = {}
        try:
            with ThreadPoolExecutor(max_workers=self._workers) as pool:
                pending = {pool.submit(job): key for key, (job, _, _) in sorted(self._jobs.items())}
                try:
                    while pending:
                        done, _ = wait(pending, return_when=FIRST_COMPLETED)
                        for future in sorted(done, key=lambda f: pending[f]):
                            key = pending.pop(future)
                            self._record(key, future, results)
                except exceptions.JobFailedError:
                    for future in pending:
                        future.cancel()
                    raise
        finally:
            self._jobs = {}
            self._is_running = False
        return dict(sorted(results.items()))
