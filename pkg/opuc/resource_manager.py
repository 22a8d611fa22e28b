"""
Resource Manager - capacity control for grid computations.

Limits worker threads and refuses grids that would push RAM past the
configured threshold. Work is partitioned into chunks whose results are
reassembled in input order, so outputs do not depend on the thread count.

Usage:
    from opuc.resource_manager import get_resource_manager

    resource_manager = get_resource_manager(threads=4)
    resource_manager.require(grid_bytes, label="scan m=3")
    parts = resource_manager.map_ordered(evolve_chunk, resource_manager.chunk(etas))
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

import numpy as np
import psutil

from config.settings import settings
from opuc.errors import ResourceExhaustedError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class ResourceManager:
    """Manages worker threads and the memory budget of grid allocations."""

    # Below this many items a chunk is not worth a thread
    MIN_CHUNK = 256

    def __init__(
        self,
        max_workers: Optional[int] = None,
        max_memory_percent: Optional[float] = None
    ):
        """
        Initialize the resource manager.

        Args:
            max_workers: Worker threads (default: settings.runner.OPUC_THREADS, 0 = all CPUs)
            max_memory_percent: RAM threshold for new allocations (default: settings.scan.MAX_MEMORY_PERCENT)
        """
        self._requested = max_workers
        requested = settings.runner.OPUC_THREADS if max_workers is None else max_workers
        self._max_workers = requested if requested > 0 else (psutil.cpu_count(logical=True) or 1)
        self._max_memory = max_memory_percent or settings.scan.MAX_MEMORY_PERCENT

        logger.debug(
            f"ResourceManager initialized: max_workers={self._max_workers}, "
            f"max_memory={self._max_memory}%"
        )

    def check_resources(self, required_bytes: int = 0) -> tuple[bool, str]:
        """
        Check whether an allocation of required_bytes fits the memory budget.

        Returns:
            Tuple (available, reason):
            - (True, "") when the allocation fits
            - (False, "reason") otherwise
        """
        memory = psutil.virtual_memory()
        if memory.percent > self._max_memory:
            return False, f"RAM at {memory.percent:.1f}% (max: {self._max_memory}%)"

        budget = memory.available - memory.total * (1.0 - self._max_memory / 100.0)
        if required_bytes > max(budget, 0):
            return False, (
                f"needs {required_bytes / 2**20:.1f} MiB, "
                f"budget {max(budget, 0) / 2**20:.1f} MiB"
            )

        return True, ""

    def require(self, required_bytes: int, label: str = "") -> None:
        """
        Raise ResourceExhaustedError when required_bytes does not fit.

        Args:
            required_bytes: Estimated size of the allocation
            label: Context for the log line (e.g. "scan m=3")
        """
        ok, reason = self.check_resources(required_bytes)
        if not ok:
            logger.warning(f"[{label or 'grid'}] Resources unavailable: {reason}")
            raise ResourceExhaustedError(reason)

    def chunk(self, array: np.ndarray, parts: Optional[int] = None) -> list[np.ndarray]:
        """Split a 1-D array into contiguous chunks (at most one per worker)."""
        array = np.asarray(array)
        count = parts or self._max_workers
        count = max(1, min(count, int(np.ceil(array.size / self.MIN_CHUNK)) or 1))
        return np.array_split(array, count)

    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """
        Apply fn to every item on the thread pool; results keep input order.
        """
        items = list(items)
        if self._max_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self._max_workers) as pool:
            return list(pool.map(fn, items))

    @property
    def max_workers(self) -> int:
        """Configured worker threads."""
        return self._max_workers

    def get_system_stats(self) -> dict:
        """
        Current system statistics.

        Returns:
            Dict with CPU, RAM and worker metrics
        """
        memory = psutil.virtual_memory()
        return {
            "cpu_percent": psutil.cpu_percent(interval=0.1),
            "memory_percent": memory.percent,
            "memory_available_mb": memory.available // (1024 * 1024),
            "max_workers": self._max_workers,
        }


# Process-wide instance used when callers do not pass one
_resource_manager: Optional[ResourceManager] = None


def get_resource_manager(threads: Optional[int] = None) -> ResourceManager:
    """
    Shared ResourceManager; passing threads replaces it with a new one.
    """
    global _resource_manager
    if _resource_manager is None or (threads is not None and threads != _resource_manager._requested):
        _resource_manager = ResourceManager(max_workers=threads)
    return _resource_manager
