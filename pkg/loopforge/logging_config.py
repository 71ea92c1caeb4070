"""Structured logging configuration.

This module provides centralized logging setup with support for:
- JSON formatting for production runs (one object per line)
- Human-readable colored formatting for development
- Configurable log levels
- Suite/identity context fields passed through ``extra=``
"""
import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from loopforge.config import settings

CONTEXT_FIELDS = ("algebra", "suite", "identity", "residual", "iteration", "command")
"""Extra record attributes copied into JSON log lines when present."""


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging in production."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON string.

        Args:
            record: Log record to format

        Returns:
            JSON-formatted log string
        """
        log_data: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        for field in CONTEXT_FIELDS:
            if hasattr(record, field):
                log_data[field] = getattr(record, field)

        return json.dumps(log_data, default=str)


class ColoredFormatter(logging.Formatter):
    """Human-readable colored formatter for development."""

    # ANSI color codes
    COLORS = {
        "DEBUG": "\033[36m",      # Cyan
        "INFO": "\033[32m",       # Green
        "WARNING": "\033[33m",    # Yellow
        "ERROR": "\033[31m",      # Red
        "CRITICAL": "\033[35m",   # Magenta
    }
    RESET = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        """Format log record with colors for terminal output.

        Args:
            record: Log record to format

        Returns:
            Colored, human-readable log string
        """
        color = self.COLORS.get(record.levelname, self.RESET)
        levelname = record.levelname
        record.levelname = f"{color}{levelname}{self.RESET}"
        try:
            message = super().format(record)
        finally:
            record.levelname = levelname
        context = [f"{f}={getattr(record, f)}" for f in CONTEXT_FIELDS if hasattr(record, f)]
        return f"{message} [{' '.join(context)}]" if context else message


_HANDLER: Optional[logging.Handler] = None


def setup_logging(log_level: Optional[str] = None) -> None:
    """Configure package-wide logging.

    Sets up structured JSON logging for production or colored console
    logging for development. Calling it again replaces the previous handler
    instead of stacking a second one.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
                   If None, uses settings.LOG_LEVEL or the ENVIRONMENT default.
    """
    global _HANDLER

    if not log_level:
        log_level = settings.LOG_LEVEL or ("INFO" if settings.is_production else "DEBUG")

    numeric_level = getattr(logging, log_level.upper(), logging.INFO)

    # Logs go to stderr so stdout stays free for report data
    handler = logging.StreamHandler(sys.stderr)

    if settings.is_production:
        formatter: logging.Formatter = JSONFormatter()
    else:
        formatter = ColoredFormatter(
            fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    handler.setFormatter(formatter)

    root_logger = logging.getLogger("loopforge")
    if _HANDLER is not None:
        root_logger.removeHandler(_HANDLER)
    root_logger.setLevel(numeric_level)
    root_logger.addHandler(handler)
    _HANDLER = handler

    # Silence noisy third-party loggers
    logging.getLogger("numpy").setLevel(logging.WARNING)
    logging.getLogger("scipy").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug(
        f"Logging configured: level={log_level.upper()}, "
        f"environment={settings.ENVIRONMENT}, "
        f"format={'JSON' if settings.is_production else 'colored'}"
    )


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a module.

    Args:
        name: Logger name, typically __name__ of the module

    Returns:
        Configured logger instance

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.info("Suite finished", extra={"suite": "loop-axioms"})
    """
    return logging.getLogger(name)
