# src/tiadc_yield/utils/logging_setup.py
import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List

from tiadc_yield.utils.config import LoggingSection

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(section: LoggingSection, verbose: bool = False) -> None:
    """Console handler (stderr) plus an optional size-rotated log file"""
    level = logging.DEBUG if verbose else getattr(logging, section.level.upper(), logging.INFO)
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if section.file:
        Path(section.file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            RotatingFileHandler(
                section.file,
                maxBytes=section.max_bytes,
                backupCount=section.backup_count,
            )
        )
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
