"""
Tests for logging system
"""
import json
import tempfile
from pathlib import Path

from src.utils.logger import LogLevel, StructuredLogger, get_logger


def read_records(path: Path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


class TestStructuredLogger:
    """Test StructuredLogger class"""

    def test_logger_creation(self):
        logger = StructuredLogger("test_logger")
        assert logger.name == "test_logger"
        assert logger.logger is not None

    def test_logger_with_file(self):
        """Test logger with file output"""
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "test.log"
            logger = StructuredLogger("test_logger", log_file=log_file, console_output=False)

            logger.info("Test message")

            assert log_file.exists()
            assert "Test message" in log_file.read_text()

    def test_log_with_extra_fields(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "test.log"
            logger = StructuredLogger("test_logger", log_file=log_file, console_output=False)

            logger.info("Test message", extra_fields={"switch": "sw", "port": "p1"})

            record = read_records(log_file)[0]
            assert record["switch"] == "sw"
            assert record["port"] == "p1"
            assert record["level"] == "INFO"

    def test_text_format(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "test.log"
            logger = StructuredLogger("text_logger", log_file=log_file, console_output=False, log_format="text")
            logger.warning("plain line")
            assert " - WARNING - plain line" in log_file.read_text()

    def test_log_run(self):
        """Test logging the end of a run"""
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "test.log"
            logger = StructuredLogger("run_logger", log_file=log_file, console_output=False)

            logger.log_run("qos_wrr", 3, 1200, 50_000_000, 0.25, details={"out_dir": "x"})

            record = read_records(log_file)[0]
            assert record["component"] == "engine"
            assert record["operation"] == "run"
            assert record["scenario"] == "qos_wrr"
            assert record["seed"] == 3
            assert record["events_processed"] == 1200
            assert record["final_time_ns"] == 50_000_000
            assert record["out_dir"] == "x"

    def test_flow_control_logged_only_at_debug(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "test.log"
            logger = StructuredLogger("fc_logger", LogLevel.INFO, log_file=log_file, console_output=False)
            logger.log_flow_control("l1:a>b", "pause", 100)
            logger.log_flow_control("l1:a>b", "ignored", 200)

            records = read_records(log_file)
            assert len(records) == 1
            assert records[0]["action"] == "ignored"
            assert records[0]["level"] == "WARNING"

    def test_flow_control_at_debug(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "test.log"
            logger = StructuredLogger("fc_debug", LogLevel.DEBUG, log_file=log_file, console_output=False)
            logger.log_flow_control("l1:a>b", "resume", 300, details={"queue": 2})
            record = read_records(log_file)[0]
            assert record["action"] == "resume"
            assert record["sim_time_ns"] == 300
            assert record["queue"] == 2

    def test_log_model_fault(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = Path(tmpdir) / "test.log"
            logger = StructuredLogger("fault_logger", log_file=log_file, console_output=False)
            logger.log_model_fault("sw.p1", RuntimeError("boom"), 42)
            record = read_records(log_file)[0]
            assert record["actor"] == "sw.p1"
            assert record["error"] == "boom"
            assert record["sim_time_ns"] == 42


class TestGetLogger:
    def test_uses_settings_level(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "ERROR")
        logger = get_logger("settings_level")
        assert not logger.is_debug()
        assert logger.logger.level == 40

    def test_log_to_file_from_settings(self, monkeypatch, tmp_path):
        log_file = tmp_path / "logs" / "sim.log"
        monkeypatch.setenv("LOG_TO_FILE", "true")
        monkeypatch.setenv("LOG_FILE", str(log_file))
        logger = get_logger("file_from_settings", console_output=False)
        logger.error("written")
        assert "written" in log_file.read_text()
