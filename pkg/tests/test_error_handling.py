"""
Tests for error handling utilities
"""
from src.utils.error_handler import (
    ConfigurationError,
    ErrorType,
    ExportError,
    FabricSimError,
    ModelError,
    SchedulingError,
    UnknownScenarioError,
    ValidationError,
    get_user_friendly_message,
    handle_error,
)


class TestCustomExceptions:
    """Test custom exception classes"""

    def test_base_error(self):
        error = FabricSimError("Test error", ErrorType.MODEL_ERROR)
        assert str(error) == "Test error"
        assert error.error_type == ErrorType.MODEL_ERROR
        assert error.details == {}
        assert error.original_error is None

    def test_to_dict(self):
        original = ValueError("Original error")
        error = FabricSimError("Test error", ErrorType.EXPORT_ERROR, {"key": "value"}, original)
        error_dict = error.to_dict()

        assert error_dict["error_type"] == "export_error"
        assert error_dict["message"] == "Test error"
        assert error_dict["details"] == {"key": "value"}
        assert "Original error" in error_dict["original_error"]

    def test_validation_error_describe(self):
        error = ValidationError("Scenario 'x' failed validation", errors=[
            {"location": "links.0.a", "line": 12, "message": "undefined node 'h9'"},
            {"location": "vlans", "line": None, "message": "VLAN 10 is not connected"},
        ])
        assert error.error_type == ErrorType.VALIDATION_ERROR
        assert error.details["errors"] == error.errors
        assert error.describe().splitlines() == [
            "line 12: links.0.a: undefined node 'h9'",
            "vlans: VLAN 10 is not connected",
        ]

    def test_validation_error_without_problems(self):
        assert ValidationError("bad").describe() == "bad"

    def test_scheduling_error_is_configuration_error(self):
        error = SchedulingError("too early", fire_at=5, now=10)
        assert isinstance(error, ConfigurationError)
        assert error.error_type == ErrorType.SCHEDULING_ERROR
        assert error.details == {"fire_at": 5, "now": 10}

    def test_model_error_actor(self):
        error = ModelError("queue underflow", actor="sw.p2")
        assert error.actor == "sw.p2"
        assert error.details["actor"] == "sw.p2"

    def test_export_error_path(self):
        error = ExportError("cannot write", path="/ro/flows.csv")
        assert error.details["path"] == "/ro/flows.csv"
        assert error.error_type == ErrorType.EXPORT_ERROR

    def test_unknown_scenario_lists_valid_names(self):
        error = UnknownScenarioError("nope", ["a", "b"])
        assert "a, b" in error.message
        assert error.valid_names == ["a", "b"]


class TestHandleError:
    def test_passes_through_own_errors(self):
        error = ModelError("x")
        assert handle_error(error) is error

    def test_os_error_becomes_export_error(self):
        result = handle_error(OSError("disk full"))
        assert result.error_type == ErrorType.EXPORT_ERROR
        assert result.message == "disk full"

    def test_value_error_becomes_validation_error(self):
        assert handle_error(ValueError("x")).error_type == ErrorType.VALIDATION_ERROR

    def test_runtime_error_becomes_model_error(self):
        assert handle_error(RuntimeError("x")).error_type == ErrorType.MODEL_ERROR

    def test_default_message(self):
        assert handle_error(KeyError()).message in ("An error occurred", "KeyError()")


class TestUserFriendlyMessages:
    def test_validation_message_includes_problems(self):
        error = ValidationError("Invalid", errors=[{"location": "seed", "line": 3, "message": "bad"}])
        assert get_user_friendly_message(error) == "Invalid\nline 3: seed: bad"

    def test_model_fault_names_actor(self):
        assert get_user_friendly_message(ModelError("boom", actor="dfm")) == "Model fault in dfm: boom"

    def test_generic_exception(self):
        assert "permissions" in get_user_friendly_message(Exception("Permission denied: /x"))
        assert get_user_friendly_message(Exception("weird")) == "An error occurred: weird"
