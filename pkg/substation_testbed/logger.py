import json
import logging
from typing import Any, Dict, Union

from rich.logging import RichHandler

# Debug flag - set to True (or pass --verbose) to enable debug output
DEBUG = False

logger = logging.getLogger("substation_testbed")


def setup_logging(verbose: bool = False) -> logging.Logger:
    """
    Attach a rich handler to the package logger. Safe to call more than once.
    """
    global DEBUG
    DEBUG = DEBUG or verbose
    level = logging.DEBUG if DEBUG else logging.INFO
    if not any(isinstance(handler, RichHandler) for handler in logger.handlers):
        handler = RichHandler(show_path=False, markup=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
        logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger


def debug_print(message: str):
    """Log debug messages only when DEBUG flag is True"""
    if DEBUG:
        logger.debug(f"[DEBUG] {message}")


def error_print(message: str):
    """Log error messages - always visible"""
    logger.error(f"[ERROR] {message}")


def info_print(message: str):
    """Log info messages - always visible"""
    logger.info(f"[INFO] {message}")


def log_error(title: str, message: Union[str, Dict[str, Any]]):
    """
    Titled error record with a text or dict payload
    """
    if isinstance(message, dict):
        message = json.dumps(message, default=str, sort_keys=True)
    logger.error(f"{title} - {message}")
