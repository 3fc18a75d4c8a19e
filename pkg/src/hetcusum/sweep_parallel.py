"""Running sweep cells in worker processes."""
from __future__ import annotations

import multiprocessing as mp
import time
from typing import TYPE_CHECKING, Any

from hetcusum import log
from hetcusum.sweep import Sweep

if TYPE_CHECKING:  # pragma: no cover
    import xarray as xr

WAIT_TIME = 0.05  # seconds between polls of the workers

# workers inherit the cell function, which may be a closure
_CONTEXT = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else None)


def _evaluate(func: Any, kwargs: dict[str, Any], queue: mp.Queue) -> None:  # noqa: ANN401  # pragma: no cover
    """Run one cell in a worker and report (results, error, duration)."""
    start = time.time()
    try:
        queue.put((func(**kwargs), None, time.time() - start))
    except Exception as error:  # noqa: BLE001
        queue.put(({}, f"{type(error).__name__}: {error}", time.time() - start))


class SweepParallel(Sweep):

    """
    Evaluate sweep cells in parallel, one process per cell.

    Takes the same arguments as :class:`~hetcusum.sweep.Sweep`. At most
    ``max_workers`` processes (default: the number of CPUs) run at a time;
    results are written into the dataset by the parent process.

    Examples
    --------
    .. code-block:: python

        from hetcusum.sweep_parallel import SweepParallel

        sweep = SweepParallel(cell, {"n": [128, 512, 2048]})
        sweep.run(max_workers=3)

    """

    def run(self,  # noqa: D102
            status: str | list[str] | None = "N",
            max_workers: int | None = None,
            ) -> xr.Dataset:
        max_workers = max_workers or mp.cpu_count()
        indices = self._get_indices(status)
        log.info(f"Found {len(indices[0])} cells to run on {max_workers} workers.")
        pending = [tuple(int(i) for i in index)
                   for index in zip(*indices, strict=True)]
        active: list[dict[str, Any]] = []

        while pending or active:
            while pending and len(active) < max_workers:
                active.append(self._start(pending.pop(0)))

            for job in list(active):
                # a full queue keeps a worker alive, so read it first
                if job["queue"].empty() and job["process"].is_alive():
                    continue
                if not job["queue"].empty():
                    results, error, duration = job["queue"].get()
                else:
                    code = job["process"].exitcode
                    results, duration = {}, float("nan")
                    error = RuntimeError(f"worker exited with code {code}")
                job["process"].join()
                active.remove(job)
                if error is not None:
                    log.error(f"Error in cell {job['kwargs']}: {error}")
                    self._finish(job["index"], "F", {}, duration)
                else:
                    log.debug(f"Finished: {job['kwargs']}")
                    self._finish(job["index"], "C", results, duration)
                log.debug(f"{len(pending) + len(active)} cells left.")

            if active:
                time.sleep(WAIT_TIME)
        return self.data

    def _start(self, index: tuple[int, ...]) -> dict[str, Any]:
        kwargs = self._get_kwargs(index)
        log.debug(f"Starting: {kwargs}")
        queue = _CONTEXT.Queue()
        process = _CONTEXT.Process(target=_evaluate, args=(self.func, kwargs, queue))
        process.start()
        return {"process": process, "queue": queue, "index": index, "kwargs": kwargs}
