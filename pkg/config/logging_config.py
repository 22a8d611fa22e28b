"""
Centralized logging configuration with daily rotation.

Each entry point writes to its own file under logs/:
- logs/runner.log → experiment runner (python -m opuc.runner)

Files rotate at midnight and are removed after LOG_RETENTION_DAYS.
Library modules only call logging.getLogger(__name__); handlers are
installed here, once, by the entry point.
"""

import logging
import sys
from pathlib import Path
from logging.handlers import TimedRotatingFileHandler

from config.settings import settings

# Logs directory (relative to the project root)
LOGS_DIR = Path(__file__).resolve().parent.parent / "logs"

LOG_RETENTION_DAYS = 7
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(service_name: str = "runner", log_dir: Path | None = None) -> logging.Logger:
    """
    Configure console logging plus a daily-rotating file for one service.

    Args:
        service_name: Service name. Selects the log file:
                     - "runner" → logs/runner.log
        log_dir: Override for the logs directory (tests use tmp_path)

    Returns:
        Configured root logger
    """
    log_level = getattr(logging, settings.general.LOG_LEVEL, logging.INFO)
    target_dir = log_dir or LOGS_DIR
    target_dir.mkdir(parents=True, exist_ok=True)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Drop previous handlers (repeated setup in tests)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)

    # Handler 1: console (stderr keeps stdout free for piping)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # Handler 2: daily rotating file
    log_file = target_dir / f"{service_name}.log"
    file_handler = TimedRotatingFileHandler(
        filename=log_file,
        when="midnight",
        interval=1,
        backupCount=LOG_RETENTION_DAYS,
        encoding="utf-8",
        utc=False
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(formatter)

    # Suffix for rotated files: runner.log.2026-01-23
    file_handler.suffix = "%Y-%m-%d"

    root_logger.addHandler(file_handler)

    logger = logging.getLogger(__name__)
    logger.info(f"Logging started [{service_name}] → {log_file}")

    return root_logger


def get_log_file_path(service_name: str = "runner") -> Path:
    """Path of a service's log file."""
    return LOGS_DIR / f"{service_name}.log"
