import logging
import os
from datetime import datetime

from termcolor import colored

LOGGER_NAME = "src"


def setup_logging(level: str = "INFO", log_dir: str = "logs", quiet: bool = False) -> logging.Logger:
    """
    Console handler with bare messages plus a daily file handler with timestamps.

    Attached to the package logger so every module's getLogger(__name__) logger inherits
    it. Calling again replaces the handlers instead of stacking them.
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # Console Handler
    c_handler = logging.StreamHandler()
    c_handler.setFormatter(logging.Formatter('%(message)s'))
    c_handler.setLevel(logging.WARNING if quiet else logging.NOTSET)
    logger.addHandler(c_handler)

    # File Handler
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)
    f_handler = logging.FileHandler(os.path.join(log_dir, f"gossip_{datetime.now().strftime('%Y%m%d')}.log"))
    f_handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))
    logger.addHandler(f_handler)

    logger.propagate = False
    return logger


def header(text: str) -> str:
    return colored(text, "cyan", attrs=["bold"])


def success(text: str) -> str:
    return colored(text, "green")


def warning(text: str) -> str:
    return colored(text, "yellow")


def failure(text: str) -> str:
    return colored(text, "red")
