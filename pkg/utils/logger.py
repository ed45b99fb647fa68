"""
PETE - Logger
-------------
This module provides logging functionality for training and the command line.
"""

import logging
import datetime
from enum import Enum, auto
from pathlib import Path

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class TrainingEvent(Enum):
    """Enum for training lifecycle events."""
    TRAINING_STARTED = auto()
    STEP_COMPLETED = auto()
    METRICS_LOGGED = auto()
    CHECKPOINT_SAVED = auto()
    TRAINING_FINISHED = auto()
    TRAINING_HALTED = auto()


def setup_logger(level=logging.INFO):
    """Set up the root logger.

    Args:
        level: Logging level

    Returns:
        The root logger
    """
    root_logger = logging.getLogger()

    # Remove any existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    root_logger.setLevel(level)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root_logger.addHandler(console_handler)

    root_logger.debug(f"Logger initialized at level {logging.getLevelName(level)}")

    return root_logger


def setup_file_logger(logger_name, out_dir, level=logging.DEBUG):
    """Set up a file logger writing under <out_dir>/logs.

    Args:
        logger_name: Logger name ('' for the root logger)
        out_dir: Run output directory
        level: Logging level

    Returns:
        (logger, log file path)
    """
    logger = logging.getLogger(logger_name)
    if logger.level == logging.NOTSET or logger.level > level:
        logger.setLevel(level)

    logs_dir = Path(out_dir) / "logs"
    logs_dir.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = logs_dir / f"{logger_name or 'pete'}_{timestamp}.log"

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(file_handler)

    logger.info(f"Logging to {log_file}")

    return logger, log_file


def remove_file_handlers(logger_name=""):
    """Detach and close file handlers added by setup_file_logger.

    Args:
        logger_name: Logger name ('' for the root logger)
    """
    logger = logging.getLogger(logger_name)
    for handler in logger.handlers[:]:
        if isinstance(handler, logging.FileHandler):
            logger.removeHandler(handler)
            handler.close()
