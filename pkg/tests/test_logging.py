"""
Tests for the logging middleware.
"""

import logging
from unittest.mock import Mock

import pytest

from middleware.logging import LOG_FORMAT, OperationLogger, configure_logging


class TestOperationLogger:
    """Test the OperationLogger utility class."""

    @pytest.fixture
    def op_logger(self):
        op_logger = OperationLogger()
        op_logger.logger = Mock()
        return op_logger

    def test_log_solver_operation(self, op_logger):
        op_logger.log_solver_operation("picard", duration=0.5, iterations=7)

        op_logger.logger.info.assert_called_once()
        message = op_logger.logger.info.call_args[0][0]
        log_data = op_logger.logger.info.call_args[1]["extra"]["log_data"]
        assert "picard" in message
        assert log_data["type"] == "solver_operation"
        assert log_data["iterations"] == 7
        assert log_data["duration"] == 0.5

    def test_log_audit_operation(self, op_logger):
        op_logger.log_audit_operation("estimate", kind="c0", max_ratio=1.5)

        message = op_logger.logger.info.call_args[0][0]
        log_data = op_logger.logger.info.call_args[1]["extra"]["log_data"]
        assert message == "Audit estimate (c0)"
        assert log_data["kind"] == "c0"
        assert log_data["max_ratio"] == 1.5

    def test_log_io_operation(self, op_logger):
        op_logger.log_io_operation("write_snapshot", "out/v.dhf1", duration=0.01)

        assert "out/v.dhf1" in op_logger.logger.info.call_args[0][0]
        assert op_logger.logger.info.call_args[1]["extra"]["log_data"]["path"] == "out/v.dhf1"

    def test_log_store_operation(self, op_logger):
        op_logger.log_store_operation("create", "audit_constants", record_id=3)

        message = op_logger.logger.info.call_args[0][0]
        assert "audit_constants" in message
        assert "3" in message

    def test_log_with_error(self, op_logger):
        op_logger.log_experiment_operation("run", kind="stability", success=False, error="diverged")

        op_logger.logger.error.assert_called_once()
        message = op_logger.logger.error.call_args[0][0]
        assert "stability" in message
        assert "diverged" in message
        op_logger.logger.info.assert_not_called()

    def test_log_exception_includes_traceback(self, op_logger):
        try:
            raise RuntimeError("boom")
        except RuntimeError as e:
            op_logger.log_exception("evolve", e)

        log_data = op_logger.logger.error.call_args[1]["extra"]["log_data"]
        assert log_data["error_type"] == "RuntimeError"
        assert "boom" in log_data["traceback"]

    def test_records_reach_caplog(self, caplog):
        with caplog.at_level(logging.INFO, logger="besov_dh"):
            OperationLogger().log_solver_operation("evolve", steps=4)
        assert any(getattr(record, "log_data", {}).get("steps") == 4 for record in caplog.records)


class TestConfigureLogging:
    def test_level_from_argument(self):
        logger = configure_logging("warning")
        assert logger.name == "besov_dh"
        assert logger.level == logging.WARNING
        configure_logging("info")

    def test_log_file_handler_added_once(self, tmp_path):
        log_file = tmp_path / "run.log"
        logger = configure_logging("info", str(log_file))
        configure_logging("info", str(log_file))
        handlers = [h for h in logger.handlers if isinstance(h, logging.FileHandler)
                    and h.baseFilename == str(log_file)]
        assert len(handlers) == 1
        assert handlers[0].formatter._fmt == LOG_FORMAT
        logger.removeHandler(handlers[0])
        handlers[0].close()
