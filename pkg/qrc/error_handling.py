#!/usr/bin/env python3
"""
Error Handling and Logging for the QRC toolkit
"""

from typing import Any, Dict, Iterable, Optional
from datetime import datetime
import json
import logging

logger = logging.getLogger("qrc.errors")

# ======================
# Exit Codes
# ======================

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_DATA = 4

# ======================
# Custom Exceptions
# ======================

class QRCException(Exception):
    """Base exception for QRC errors"""
    def __init__(self, message: str, error_code: str, exit_code: int = EXIT_DATA):
        self.message = message
        self.error_code = error_code
        self.exit_code = exit_code
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.message, "error_code": self.error_code}


class ValidationException(QRCException):
    """Invalid parameters or arguments"""
    def __init__(self, message: str):
        super().__init__(
            message=message,
            error_code="VALIDATION_ERROR",
            exit_code=EXIT_USAGE
        )


class DataException(QRCException):
    """Input data violates a structural rule"""
    def __init__(self, message: str, error_code: str = "DATA_ERROR"):
        super().__init__(message=message, error_code=error_code, exit_code=EXIT_DATA)


class DuplicateLinkException(DataException):
    """The same (source, target) pair was given twice"""
    def __init__(self, source: Any, target: Any):
        self.source = source
        self.target = target
        super().__init__(
            message=f"Duplicate link between '{source}' and '{target}'",
            error_code="DUPLICATE_LINK"
        )


class RecordNotFoundException(DataException):
    """Referenced record does not exist"""
    def __init__(self, record_type: str, record_id: Any):
        self.record_type = record_type
        self.record_id = record_id
        super().__init__(
            message=f"{record_type} '{record_id}' not found",
            error_code="RECORD_NOT_FOUND"
        )


class DimensionMismatchException(DataException):
    """Vector length does not match the node count of its side"""
    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(
            message=f"{what}: expected length {expected}, got {actual}",
            error_code="DIMENSION_MISMATCH"
        )


class EmptyNetworkException(DataException):
    """Algorithm invoked on a network without links"""
    def __init__(self, algorithm: str):
        super().__init__(
            message=f"{algorithm} requires a network with at least one link",
            error_code="EMPTY_NETWORK"
        )


class IdMismatchException(DataException):
    """Two inputs that must describe the same nodes do not"""
    def __init__(self, what: str, offending: Iterable[Any], limit: int = 10):
        offending = list(offending)
        self.offending = offending
        shown = ", ".join(str(x) for x in offending[:limit])
        more = f" (+{len(offending) - limit} more)" if len(offending) > limit else ""
        super().__init__(
            message=f"{what}: {len(offending)} mismatched id(s): {shown}{more}",
            error_code="ID_MISMATCH"
        )

# ======================
# Error Context Manager
# ======================

class ErrorContext:
    """Context manager for consistent error logging"""

    def __init__(self, operation: str, logger: logging.Logger = logger):
        self.operation = operation
        self.logger = logger

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            return False

        if isinstance(exc_val, QRCException):
            self.logger.error(
                f"Error in {self.operation}: {exc_val.message}",
                extra={"error_code": exc_val.error_code, "operation": self.operation}
            )
        else:
            self.logger.error(
                f"Error in {self.operation}: {exc_val}",
                exc_info=(exc_type, exc_val, exc_tb),
                extra={"operation": self.operation}
            )

        # Don't suppress exception
        return False

# ======================
# Logging Configuration
# ======================

_EXTRA_FIELDS = (
    "error_code", "operation", "algorithm", "iterations", "residual",
    "converged", "seed", "path",
)


class JSONFormatter(logging.Formatter):
    """One JSON object per log record"""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno
        }

        for name in _EXTRA_FIELDS:
            if hasattr(record, name):
                log_data[name] = getattr(record, name)

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5
) -> logging.Logger:
    """Configure console (stderr) and optional JSON file logging"""
    from logging.handlers import RotatingFileHandler

    root = logging.getLogger("qrc")
    root.setLevel(getattr(logging, level.upper()))

    # Re-running the CLI in one process must not stack handlers
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, level.upper()))
    console_handler.setFormatter(logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    ))
    root.addHandler(console_handler)

    if log_file:
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=max_bytes,
            backupCount=backup_count
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(JSONFormatter())
        root.addHandler(file_handler)

    return root
