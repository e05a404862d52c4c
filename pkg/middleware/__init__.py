# Middleware package: logging and error handling

from .logging import (
    configure_logging,
    OperationLogger,
    operation_logger
)

from .error_handling import (
    ErrorHandler,
    DatabaseErrorHandler,
    error_handler,
    database_error_handler,
    EXIT_OK,
    EXIT_FAILURE,
    EXIT_USAGE
)

__all__ = [
    # Logging
    "configure_logging",
    "OperationLogger",
    "operation_logger",

    # Error Handling
    "ErrorHandler",
    "DatabaseErrorHandler",
    "error_handler",
    "database_error_handler",
    "EXIT_OK",
    "EXIT_FAILURE",
    "EXIT_USAGE"
]
