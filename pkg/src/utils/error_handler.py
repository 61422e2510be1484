"""
Error handling utilities and custom exceptions
"""
from typing import Optional, Dict, Any, List
from enum import Enum


class ErrorType(Enum):
    """Error type categories"""
    VALIDATION_ERROR = "validation_error"
    CONFIGURATION_ERROR = "configuration_error"
    SCHEDULING_ERROR = "scheduling_error"
    MODEL_ERROR = "model_error"
    EXPORT_ERROR = "export_error"
    SCENARIO_ERROR = "scenario_error"
    UNKNOWN_ERROR = "unknown_error"


class FabricSimError(Exception):
    """Base exception for simulator errors"""

    def __init__(
        self,
        message: str,
        error_type: ErrorType = ErrorType.UNKNOWN_ERROR,
        details: Optional[Dict[str, Any]] = None,
        original_error: Optional[Exception] = None
    ):
        """
        Initialize simulator error

        Args:
            message: User-facing error message
            error_type: Type of error
            details: Additional error details
            original_error: Original exception if this wraps another error
        """
        super().__init__(message)
        self.message = message
        self.error_type = error_type
        self.details = details or {}
        self.original_error = original_error

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to dictionary"""
        result = {
            "error_type": self.error_type.value,
            "message": self.message,
            "details": self.details
        }
        if self.original_error:
            result["original_error"] = str(self.original_error)
        return result


class ValidationError(FabricSimError):
    """Scenario document failed validation; carries every located problem"""

    def __init__(
        self,
        message: str,
        errors: Optional[List[Dict[str, Any]]] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        details = details or {}
        self.errors = errors or []
        details["errors"] = self.errors
        super().__init__(
            message,
            ErrorType.VALIDATION_ERROR,
            details
        )

    def describe(self) -> str:
        """One line per problem, prefixed with its line number when known"""
        lines = []
        for err in self.errors:
            where = err.get("location", "")
            line = err.get("line")
            prefix = f"line {line}: " if line else ""
            lines.append(f"{prefix}{where}: {err.get('message', '')}".rstrip(": "))
        return "\n".join(lines) if lines else self.message


class ConfigurationError(FabricSimError):
    """Error for invalid model or settings configuration"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message,
            ErrorType.CONFIGURATION_ERROR,
            details
        )


class SchedulingError(ConfigurationError):
    """An event was scheduled before the current virtual time"""

    def __init__(self, message: str, fire_at: int, now: int):
        super().__init__(message, details={"fire_at": fire_at, "now": now})
        self.error_type = ErrorType.SCHEDULING_ERROR


class ModelError(FabricSimError):
    """Fatal fault inside the simulated model"""

    def __init__(
        self,
        message: str,
        actor: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        original_error: Optional[Exception] = None
    ):
        details = details or {}
        if actor:
            details["actor"] = actor
        self.actor = actor

        super().__init__(
            message,
            ErrorType.MODEL_ERROR,
            details,
            original_error
        )


class ExportError(FabricSimError):
    """Error writing metric reports"""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        details = {}
        if path:
            details["path"] = path

        super().__init__(
            message,
            ErrorType.EXPORT_ERROR,
            details,
            original_error
        )


class UnknownScenarioError(FabricSimError):
    """Requested canned scenario does not exist"""

    def __init__(self, name: str, valid_names: List[str]):
        super().__init__(
            f"Unknown scenario '{name}'. Valid scenarios: {', '.join(valid_names)}",
            ErrorType.SCENARIO_ERROR,
            {"name": name, "valid": list(valid_names)}
        )
        self.valid_names = list(valid_names)


def handle_error(
    error: Exception,
    default_message: str = "An error occurred",
    error_type: ErrorType = ErrorType.UNKNOWN_ERROR
) -> FabricSimError:
    """
    Convert a generic exception to a simulator error

    Args:
        error: Original exception
        default_message: Default message if error has no message
        error_type: Error type to use

    Returns:
        FabricSimError instance
    """
    if isinstance(error, FabricSimError):
        return error

    message = str(error) if str(error) else default_message

    if isinstance(error, (OSError, IOError)):
        error_type = ErrorType.EXPORT_ERROR
    elif isinstance(error, ValueError) or "invalid" in message.lower():
        error_type = ErrorType.VALIDATION_ERROR
    elif isinstance(error, (AssertionError, RuntimeError)):
        error_type = ErrorType.MODEL_ERROR

    return FabricSimError(
        message=message,
        error_type=error_type,
        original_error=error
    )


def get_user_friendly_message(error: Exception) -> str:
    """
    Get a user-friendly error message from an exception

    Args:
        error: Exception to convert

    Returns:
        User-friendly error message
    """
    if isinstance(error, ValidationError):
        return f"{error.message}\n{error.describe()}"
    if isinstance(error, ModelError) and error.actor:
        return f"Model fault in {error.actor}: {error.message}"
    if isinstance(error, FabricSimError):
        return error.message

    error_str = str(error)

    friendly_messages = {
        "permission denied": "Cannot write to the output location. Check directory permissions.",
        "no such file": "A referenced file was not found.",
        "invalid": "The provided input is invalid. Please check and try again.",
    }

    error_lower = error_str.lower()
    for key, message in friendly_messages.items():
        if key in error_lower:
            return message

    return f"An error occurred: {error_str}"
