"""
Structured logging system for the fabric simulator
"""
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Dict, Any
from enum import Enum

from pythonjsonlogger import jsonlogger


class LogLevel(Enum):
    """Log levels"""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class JSONFormatter(jsonlogger.JsonFormatter):
    """JSON formatter that flattens the structured extra fields into the record"""

    def add_fields(
        self,
        log_record: Dict[str, Any],
        record: logging.LogRecord,
        message_dict: Dict[str, Any]
    ) -> None:
        super().add_fields(log_record, record, message_dict)
        log_record["timestamp"] = datetime.now(timezone.utc).isoformat()
        log_record["level"] = record.levelname
        log_record["logger"] = record.name
        log_record["module"] = record.module
        log_record["function"] = record.funcName
        log_record["line"] = record.lineno

        extra_fields = getattr(record, "extra_fields", None)
        if extra_fields:
            log_record.pop("extra_fields", None)
            log_record.update(extra_fields)


class StructuredLogger:
    """Structured logger for simulator components"""

    def __init__(
        self,
        name: str,
        log_level: LogLevel = LogLevel.INFO,
        log_file: Optional[Path] = None,
        console_output: bool = True,
        log_format: str = "json"
    ):
        """
        Initialize structured logger

        Args:
            name: Logger name
            log_level: Minimum log level
            log_file: Optional log file path
            console_output: Whether to output to console
            log_format: "json" or "text" for the file handler
        """
        self.name = name
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, log_level.value))
        self.logger.propagate = False

        # Prevent duplicate handlers
        if self.logger.handlers:
            self.logger.handlers.clear()

        if console_output:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(getattr(logging, log_level.value))
            console_handler.setFormatter(logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
            ))
            self.logger.addHandler(console_handler)

        if log_file:
            log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_file)
            file_handler.setLevel(getattr(logging, log_level.value))
            if log_format == "json":
                file_handler.setFormatter(JSONFormatter("%(message)s"))
            else:
                file_handler.setFormatter(logging.Formatter(
                    '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
                ))
            self.logger.addHandler(file_handler)

    def is_debug(self) -> bool:
        """True when DEBUG records would be emitted"""
        return self.logger.isEnabledFor(logging.DEBUG)

    def _log_with_extra(
        self,
        level: str,
        message: str,
        extra_fields: Optional[Dict[str, Any]] = None,
        exc_info: Optional[Exception] = None
    ):
        """
        Log with extra fields

        Args:
            level: Log level
            message: Log message
            extra_fields: Additional fields to include
            exc_info: Exception info
        """
        extra = {}
        if extra_fields:
            extra["extra_fields"] = extra_fields

        log_method = getattr(self.logger, level.lower())
        log_method(message, extra=extra, exc_info=exc_info)

    def debug(self, message: str, extra_fields: Optional[Dict[str, Any]] = None):
        """Log debug message"""
        self._log_with_extra("DEBUG", message, extra_fields)

    def info(self, message: str, extra_fields: Optional[Dict[str, Any]] = None):
        """Log info message"""
        self._log_with_extra("INFO", message, extra_fields)

    def warning(self, message: str, extra_fields: Optional[Dict[str, Any]] = None):
        """Log warning message"""
        self._log_with_extra("WARNING", message, extra_fields)

    def error(
        self,
        message: str,
        extra_fields: Optional[Dict[str, Any]] = None,
        exc_info: Optional[Exception] = None
    ):
        """Log error message"""
        self._log_with_extra("ERROR", message, extra_fields, exc_info)

    def critical(
        self,
        message: str,
        extra_fields: Optional[Dict[str, Any]] = None,
        exc_info: Optional[Exception] = None
    ):
        """Log critical message"""
        self._log_with_extra("CRITICAL", message, extra_fields, exc_info)

    def log_run(
        self,
        scenario: str,
        seed: int,
        events_processed: int,
        final_time_ns: int,
        wall_seconds: Optional[float] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Log the completion of one simulation run

        Args:
            scenario: Scenario name
            seed: Run seed
            events_processed: Number of dispatched events
            final_time_ns: Virtual time at the end of the run
            wall_seconds: Wall-clock duration
            details: Additional details (sweep point, output dir)
        """
        extra_fields = {
            "component": "engine",
            "operation": "run",
            "scenario": scenario,
            "seed": seed,
            "events_processed": events_processed,
            "final_time_ns": final_time_ns,
        }
        if wall_seconds is not None:
            extra_fields["wall_seconds"] = round(wall_seconds, 3)
        if details:
            extra_fields.update(details)

        self.info(
            f"Run {scenario} finished: {events_processed} events, t={final_time_ns} ns",
            extra_fields=extra_fields
        )

    def log_flow_control(
        self,
        link: str,
        action: str,
        sim_time_ns: int,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Log a PAUSE/RESUME decision on a link direction (DEBUG)

        Args:
            link: Link direction name
            action: "pause", "resume" or "ignored"
            sim_time_ns: Virtual time of the decision
            details: Additional details
        """
        if action != "ignored" and not self.is_debug():
            return
        extra_fields = {
            "component": "link",
            "operation": "flow_control",
            "link": link,
            "action": action,
            "sim_time_ns": sim_time_ns,
        }
        if details:
            extra_fields.update(details)

        if action == "ignored":
            self.warning(f"Flow control disabled on {link}; pause request ignored",
                         extra_fields=extra_fields)
        else:
            self.debug(f"{action} on {link} at t={sim_time_ns}", extra_fields=extra_fields)

    def log_model_fault(
        self,
        actor: str,
        error: Exception,
        sim_time_ns: Optional[int] = None
    ):
        """
        Log a fatal model fault

        Args:
            actor: Actor or port that raised
            error: The fault
            sim_time_ns: Virtual time of the fault
        """
        extra_fields = {
            "component": "engine",
            "operation": "dispatch",
            "actor": actor,
            "error": str(error),
        }
        if sim_time_ns is not None:
            extra_fields["sim_time_ns"] = sim_time_ns

        self.error(f"Model fault in {actor}: {error}", extra_fields=extra_fields)


def get_logger(
    name: str = "fabricsim",
    log_level: Optional[LogLevel] = None,
    log_file: Optional[Path] = None,
    console_output: bool = True
) -> StructuredLogger:
    """
    Get or create a structured logger

    Level, file and format default to the values in Settings.

    Args:
        name: Logger name
        log_level: Minimum log level
        log_file: Optional log file path
        console_output: Whether to output to console

    Returns:
        StructuredLogger instance
    """
    from src.config.settings import get_settings

    settings = get_settings()
    if log_level is None:
        log_level = LogLevel(settings.log_level)
    if log_file is None and settings.log_to_file:
        log_file = Path(settings.log_file)

    return StructuredLogger(name, log_level, log_file, console_output, settings.log_format)
