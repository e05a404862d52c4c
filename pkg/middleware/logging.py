import logging
import os
import traceback
from datetime import datetime
from typing import Any, Dict, Optional

LOGGER_NAME = "besov_dh"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the toolkit logger from arguments or the environment

    Args:
        level: Log level name, defaults to env LOG_LEVEL or INFO
        log_file: Optional log file, defaults to env LOG_FILE

    Returns:
        logging.Logger: The configured "besov_dh" logger
    """
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    logger = logging.getLogger(LOGGER_NAME)

    log_file = log_file or os.getenv("LOG_FILE")
    if log_file and not any(
        isinstance(h, logging.FileHandler) and h.baseFilename == os.path.abspath(log_file)
        for h in logger.handlers
    ):
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    level_name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logger.setLevel(getattr(logging, level_name, logging.INFO))
    return logger


class OperationLogger:
    """Structured log records for solver, audit, io and experiment operations"""

    def __init__(self, logger_name: str = LOGGER_NAME):
        self.logger = logging.getLogger(logger_name)

    def _emit(self, kind: str, operation: str, message: str, success: bool,
              error: Optional[str], duration: Optional[float], fields: Dict[str, Any]) -> None:
        log_data = {
            "timestamp": datetime.now().isoformat(),
            "type": kind,
            "operation": operation,
            "success": success,
            "error": error,
            "duration": duration,
        }
        log_data.update(fields)

        if success:
            self.logger.info(message, extra={"log_data": log_data})
        else:
            self.logger.error(f"{message} failed: {error}", extra={"log_data": log_data})

    def log_solver_operation(self, operation: str, success: bool = True, error: str = None,
                             duration: float = None, **fields: Any) -> None:
        """Log time stepping, Picard and horizon-selection operations"""
        self._emit("solver_operation", operation, f"Solver {operation}", success, error, duration, fields)

    def log_audit_operation(self, operation: str, kind: str = None, success: bool = True,
                            error: str = None, duration: float = None, **fields: Any) -> None:
        """Log inequality audits and constant estimation"""
        label = f"Audit {operation}" + (f" ({kind})" if kind else "")
        self._emit("audit_operation", operation, label, success, error, duration, dict(fields, kind=kind))

    def log_io_operation(self, operation: str, path: str = None, success: bool = True,
                         error: str = None, duration: float = None, **fields: Any) -> None:
        """Log snapshot and report file operations"""
        label = f"IO {operation}" + (f" {path}" if path else "")
        self._emit("io_operation", operation, label, success, error, duration, dict(fields, path=path))

    def log_experiment_operation(self, operation: str, kind: str = None, success: bool = True,
                                 error: str = None, duration: float = None, **fields: Any) -> None:
        """Log experiment drivers"""
        label = f"Experiment {operation}" + (f" ({kind})" if kind else "")
        self._emit("experiment_operation", operation, label, success, error, duration, dict(fields, kind=kind))

    def log_store_operation(self, operation: str, table: str, record_id: int = None, success: bool = True,
                            error: str = None, duration: float = None) -> None:
        """Log constant-store database operations"""
        label = f"Database {operation} on {table}" + (f" (ID: {record_id})" if record_id else "")
        self._emit("database_operation", operation, label, success, error, duration,
                   {"table": table, "record_id": record_id})

    def log_exception(self, operation: str, error: BaseException) -> None:
        """Log an unexpected exception with its traceback"""
        log_data = {
            "timestamp": datetime.now().isoformat(),
            "type": "error",
            "operation": operation,
            "error_type": type(error).__name__,
            "error_message": str(error),
            "traceback": "".join(traceback.format_exception(type(error), error, error.__traceback__)),
        }
        self.logger.error(f"Error in {operation}: {type(error).__name__}: {error}", extra={"log_data": log_data})


# Global logger instance
operation_logger = OperationLogger()
