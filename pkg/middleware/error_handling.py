from sqlalchemy.exc import SQLAlchemyError, IntegrityError, OperationalError
from pydantic import ValidationError
from typing import Any, Callable, Dict, Optional, Tuple
import logging
from datetime import datetime

from middleware.logging import operation_logger
from services.exceptions import (
    BesovDHError,
    BlowUpError,
    ConfigError,
    ExperimentRefusedError,
    PicardDivergenceError,
    SnapshotFormatError,
)

logger = logging.getLogger("besov_dh")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class ErrorHandler:
    """Centralized mapping of exceptions to JSON error payloads and exit codes"""

    @staticmethod
    def _payload(error: str, message: str, exc: BaseException, details: Any, command: Optional[str]) -> Dict[str, Any]:
        return {
            "error": error,
            "message": message,
            "type": type(exc).__name__,
            "details": details,
            "timestamp": datetime.now().isoformat(),
            "command": command,
        }

    @staticmethod
    def handle_validation_error(error: ValidationError, command: str = None) -> Tuple[int, Dict[str, Any]]:
        """
        Handle pydantic validation errors on configs and specs

        Args:
            error: ValidationError from pydantic
            command: Subcommand being executed

        Returns:
            Tuple[int, Dict]: Exit code 2 and the formatted payload
        """
        error_details = []
        for error_item in error.errors():
            error_details.append({
                "field": " -> ".join(str(loc) for loc in error_item["loc"]),
                "message": error_item["msg"],
                "type": error_item["type"],
            })

        logger.warning(f"Validation error: {error_details}")
        return EXIT_USAGE, ErrorHandler._payload(
            "Validation Error", "Invalid parameters provided", error, error_details, command,
        )

    @staticmethod
    def handle_config_error(error: ConfigError, command: str = None) -> Tuple[int, Dict[str, Any]]:
        details = {"line": error.lineno, "key": error.key}
        logger.warning(f"Config error: {error}")
        return EXIT_USAGE, ErrorHandler._payload("Config Error", str(error), error, details, command)

    @staticmethod
    def handle_snapshot_error(error: SnapshotFormatError, command: str = None) -> Tuple[int, Dict[str, Any]]:
        logger.warning(f"Snapshot format error: {error}")
        return EXIT_USAGE, ErrorHandler._payload(
            "Snapshot Format Error", str(error), error, error.details, command,
        )

    @staticmethod
    def handle_solver_failure(error: BesovDHError, command: str = None) -> Tuple[int, Dict[str, Any]]:
        """
        Handle divergence, blow-up and refused experiments

        The attached report, when present, is included in the details so a
        failed run still leaves a machine-readable trace.
        """
        details = dict(error.details)
        report = getattr(error, "report", None)
        if report is not None:
            details["report"] = report.model_dump(mode="json")
        labels = {
            PicardDivergenceError: "Picard Divergence",
            BlowUpError: "Blow-up",
            ExperimentRefusedError: "Experiment Refused",
        }
        logger.error(f"{labels[type(error)]}: {error}")
        return EXIT_FAILURE, ErrorHandler._payload(labels[type(error)], str(error), error, details, command)

    @staticmethod
    def handle_domain_error(error: BesovDHError, command: str = None) -> Tuple[int, Dict[str, Any]]:
        logger.error(f"Domain error ({type(error).__name__}): {error}")
        return EXIT_USAGE if isinstance(error, ValueError) else EXIT_FAILURE, ErrorHandler._payload(
            "Invalid Input" if isinstance(error, ValueError) else "Numerical Error", str(error), error,
            error.details, command,
        )

    @staticmethod
    def handle_io_error(error: OSError, command: str = None) -> Tuple[int, Dict[str, Any]]:
        logger.warning(f"I/O error: {error}")
        return EXIT_USAGE, ErrorHandler._payload(
            "I/O Error", error.strerror or str(error), error, {"path": error.filename}, command,
        )

    @staticmethod
    def handle_generic_error(error: Exception, command: str = None) -> Tuple[int, Dict[str, Any]]:
        """
        Handle unexpected exceptions

        Args:
            error: Any exception
            command: Subcommand being executed

        Returns:
            Tuple[int, Dict]: Exit code 1 and the formatted payload
        """
        operation_logger.log_exception(command or "unknown", error)
        logger.error(f"Unexpected error: {str(error)}", exc_info=error)
        return EXIT_FAILURE, ErrorHandler._payload(
            "Internal Error", "An unexpected error occurred", error, str(error), command,
        )

    def handle(self, error: BaseException, command: str = None) -> Tuple[int, Dict[str, Any]]:
        """Dispatch an exception to its handler."""
        if isinstance(error, ValidationError):
            return self.handle_validation_error(error, command)
        if isinstance(error, ConfigError):
            return self.handle_config_error(error, command)
        if isinstance(error, SnapshotFormatError):
            return self.handle_snapshot_error(error, command)
        if isinstance(error, (PicardDivergenceError, BlowUpError, ExperimentRefusedError)):
            return self.handle_solver_failure(error, command)
        if isinstance(error, BesovDHError):
            return self.handle_domain_error(error, command)
        if isinstance(error, OSError):
            return self.handle_io_error(error, command)
        return self.handle_generic_error(error, command)


class DatabaseErrorHandler:
    """Specialized handler for constant-store operations"""

    @staticmethod
    def safe_store_operation(operation_func: Callable, *args, default: Any = None, **kwargs) -> Any:
        """
        Execute a store operation, falling back to a default on database errors

        The constant store is optional; a broken database degrades to
        re-measuring constants instead of aborting the run.

        Args:
            operation_func: Function to execute
            *args: Positional arguments
            default: Value returned when the operation fails
            **kwargs: Keyword arguments

        Returns:
            Result of the operation, or default
        """
        try:
            return operation_func(*args, **kwargs)
        except IntegrityError as e:
            logger.error(f"Database integrity error: {str(e)}")
        except OperationalError as e:
            logger.error(f"Database operational error: {str(e)}")
        except SQLAlchemyError as e:
            logger.error(f"Database error: {str(e)}")
        return default


# Global error handler instances
error_handler = ErrorHandler()
database_error_handler = DatabaseErrorHandler()
