"""
Unit tests for ResourceManager.

Validates:
- Initialization and configuration
- Memory budget checks (mocking psutil)
- Ordered chunked mapping, independent of the thread count
- Properties and statistics

python -m pytest tests/test_opuc/test_resource_manager.py
"""
import numpy as np
import pytest
from unittest.mock import patch, MagicMock

from opuc.errors import ResourceExhaustedError
from opuc.resource_manager import ResourceManager, get_resource_manager

GIB = 2 ** 30


def _memory(percent=60.0, total=16 * GIB, available=8 * GIB):
    return MagicMock(percent=percent, total=total, available=available)


class TestResourceManagerInit:
    """Initialization."""

    def test_init_default_values(self):
        """Defaults come from settings; 0 threads means all CPUs."""
        with patch("opuc.resource_manager.settings") as mock_settings, \
                patch("opuc.resource_manager.psutil") as mock_psutil:
            mock_settings.runner.OPUC_THREADS = 0
            mock_settings.scan.MAX_MEMORY_PERCENT = 85.0
            mock_psutil.cpu_count.return_value = 8

            rm = ResourceManager()

            assert rm.max_workers == 8
            assert rm._max_memory == 85.0

    def test_init_custom_values(self):
        """Explicit values win over settings."""
        rm = ResourceManager(max_workers=3, max_memory_percent=70.0)

        assert rm.max_workers == 3
        assert rm._max_memory == 70.0

    def test_cpu_count_unknown_falls_back_to_one(self):
        with patch("opuc.resource_manager.psutil") as mock_psutil:
            mock_psutil.cpu_count.return_value = None
            rm = ResourceManager(max_workers=0)
            assert rm.max_workers == 1


class TestCheckResources:
    """Memory budget checks."""

    def test_check_resources_available(self):
        """Fits when RAM is below the threshold and the budget covers the request."""
        rm = ResourceManager(max_workers=1, max_memory_percent=85.0)

        with patch("opuc.resource_manager.psutil") as mock_psutil:
            mock_psutil.virtual_memory.return_value = _memory()

            ok, reason = rm.check_resources(GIB)

            assert ok is True
            assert reason == ""

    def test_check_resources_high_memory(self):
        """Refuses when RAM is already above the threshold."""
        rm = ResourceManager(max_workers=1, max_memory_percent=85.0)

        with patch("opuc.resource_manager.psutil") as mock_psutil:
            mock_psutil.virtual_memory.return_value = _memory(percent=95.0)

            ok, reason = rm.check_resources(0)

            assert ok is False
            assert "RAM" in reason

    def test_check_resources_request_too_large(self):
        """Refuses a request larger than available minus the reserved share."""
        rm = ResourceManager(max_workers=1, max_memory_percent=85.0)

        with patch("opuc.resource_manager.psutil") as mock_psutil:
            # budget = 8 GiB - 16 GiB * 0.15 = 5.6 GiB
            mock_psutil.virtual_memory.return_value = _memory()

            ok, reason = rm.check_resources(6 * GIB)

            assert ok is False
            assert "MiB" in reason

    def test_require_raises(self):
        rm = ResourceManager(max_workers=1, max_memory_percent=85.0)

        with patch("opuc.resource_manager.psutil") as mock_psutil:
            mock_psutil.virtual_memory.return_value = _memory(percent=99.0)

            with pytest.raises(ResourceExhaustedError):
                rm.require(1024, label="scan m=1")

    def test_require_passes(self):
        rm = ResourceManager(max_workers=1, max_memory_percent=85.0)

        with patch("opuc.resource_manager.psutil") as mock_psutil:
            mock_psutil.virtual_memory.return_value = _memory()
            rm.require(1024, label="scan m=1")


class TestChunkedMapping:
    """chunk and map_ordered."""

    def test_chunk_covers_array_in_order(self):
        rm = ResourceManager(max_workers=4)
        data = np.arange(5000)

        chunks = rm.chunk(data)

        assert 1 < len(chunks) <= 4
        assert np.array_equal(np.concatenate(chunks), data)

    def test_small_arrays_stay_in_one_chunk(self):
        """Arrays below MIN_CHUNK are not split."""
        rm = ResourceManager(max_workers=8)
        assert len(rm.chunk(np.arange(10))) == 1

    def test_map_ordered_keeps_input_order(self):
        rm = ResourceManager(max_workers=4)
        result = rm.map_ordered(lambda x: x * x, range(50))
        assert result == [x * x for x in range(50)]

    def test_result_independent_of_thread_count(self):
        """Same chunked computation, different worker counts, identical output."""
        data = np.linspace(0.0, 6.0, 4096)

        def compute(rm):
            parts = rm.map_ordered(lambda c: np.sin(c) * np.exp(-c), rm.chunk(data))
            return np.concatenate(parts)

        assert np.array_equal(compute(ResourceManager(max_workers=1)), compute(ResourceManager(max_workers=7)))


class TestStats:
    """Properties and statistics."""

    def test_get_system_stats(self):
        rm = ResourceManager(max_workers=2)

        with patch("opuc.resource_manager.psutil") as mock_psutil:
            mock_psutil.cpu_percent.return_value = 25.0
            mock_psutil.virtual_memory.return_value = _memory(percent=40.0, available=4 * GIB)

            stats = rm.get_system_stats()

            assert stats["cpu_percent"] == 25.0
            assert stats["memory_percent"] == 40.0
            assert stats["memory_available_mb"] == 4096
            assert stats["max_workers"] == 2

    def test_get_resource_manager_replaced_on_new_thread_count(self):
        first = get_resource_manager(threads=2)
        assert get_resource_manager() is first
        second = get_resource_manager(threads=3)
        assert second is not first
        assert second.max_workers == 3
