"""The package logger, exported as ``hetcusum.log``."""
from __future__ import annotations

import logging
import sys

LOG_FORMAT = "%(levelname)s - %(message)s"


def _package_logger(name: str = "hetcusum") -> logging.Logger:
    logger = logging.getLogger(name)
    # stdout carries results only
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    return logger


log = _package_logger()
