"""
Custom exceptions for the branching simulator with helpful error messages and suggestions.
"""


class BranchSimError(Exception):
    """Base exception class for all simulator errors."""

    def __init__(self, message: str, suggestion: str = ""):
        self.message = message
        self.suggestion = suggestion
        full_message = message
        if suggestion:
            full_message = f"{message}\n💡 Suggestion: {suggestion}"
        super().__init__(full_message)


class DimensionMismatchError(BranchSimError):
    """Raised when an operator, state or layout has the wrong dimension."""

    def __init__(self, operation: str, expected: int | str, actual: int | str):
        message = f"Dimension mismatch in {operation}: expected {expected}, got {actual}"
        suggestion = (
            "1. Build operators against the same SpaceLayout as the state\n"
            "2. Use embed() to lift register-local operators to the full space\n"
            "3. Check the register order: observer first, then environment registers"
        )
        super().__init__(message, suggestion)


class NonUnitaryError(BranchSimError):
    """Raised when an operator fails the unitarity check."""

    def __init__(self, label: str, deviation: float, tolerance: float):
        name = f"'{label}'" if label else "operator"
        message = (
            f"Operator {name} is not unitary: max|U†U - I| = {deviation:.3e} "
            f"exceeds {tolerance:.0e}"
        )
        suggestion = (
            "1. Check that the construction completes every basis column\n"
            "2. Permutation-built operators must map each index exactly once"
        )
        super().__init__(message, suggestion)


class NonFiniteAmplitudeError(BranchSimError):
    """Raised when a state or operator contains NaN or Inf entries."""

    def __init__(self, what: str):
        message = f"Non-finite entries found in {what}"
        suggestion = "Check the inputs for divisions by zero or overflowing products"
        super().__init__(message, suggestion)


class RegisterError(BranchSimError):
    """Raised for unknown, duplicated or malformed registers."""

    def __init__(self, register: str, reason: str = ""):
        message = f"Register error for '{register}'"
        if reason:
            message += f": {reason}"
        suggestion = (
            "1. Verify the register label is spelled as in the layout\n"
            "2. Register names must be unique and every dim must be >= 2\n"
            "3. At most one observer register is allowed and it must come first"
        )
        super().__init__(message, suggestion)


class CapacityError(BranchSimError):
    """Raised when a layout exceeds the dense-representation cap."""

    def __init__(self, total_dim: int, limit: int):
        message = f"Layout dimension {total_dim} exceeds the dense limit of {limit}"
        suggestion = (
            "1. Use fewer macrostates (pass a smaller macrostate_count)\n"
            "2. Split the experiment into smaller layouts"
        )
        super().__init__(message, suggestion)


class EmptyBranchError(BranchSimError):
    """Raised when a branch or state with zero weight is normalized or sampled."""

    def __init__(self, context: str):
        message = f"Zero-weight branch in {context}"
        suggestion = (
            "1. Only project onto outcomes with nonzero Born weight\n"
            "2. A zero state usually means an operator annihilated the input"
        )
        super().__init__(message, suggestion)


class ObserverRegisterError(BranchSimError):
    """Raised when a layout lacks the observer register where one is required."""

    def __init__(self, layout_names: tuple[str, ...]):
        message = f"Layout {list(layout_names)} has no observer register in first position"
        suggestion = "Declare the observer macrostate register first with role='observer'"
        super().__init__(message, suggestion)


class AncillaNotFreshError(BranchSimError):
    """Raised when an ancilla register is not in its reference basis state."""

    def __init__(self, register: str, stray_weight: float):
        message = (
            f"Ancilla '{register}' is not fresh: weight {stray_weight:.3e} "
            "lies outside its reference state"
        )
        suggestion = (
            "1. Allocate one dump ancilla per erasure event\n"
            "2. Do not reuse an ancilla that already received a record"
        )
        super().__init__(message, suggestion)


class ProbabilityRangeError(BranchSimError):
    """Raised when a probability parameter lies outside [0, 1]."""

    def __init__(self, name: str, value: object):
        message = f"Probability '{name}' must lie in [0, 1], got {value!r}"
        super().__init__(message, f"Pass {name} as a number between 0 and 1")


class UndefinedConditionalError(BranchSimError):
    """Raised when P(disaster | reset) is requested but no reset can happen."""

    def __init__(self, p: object, q: object):
        message = f"P_dis is undefined for p={p!r}, q={q!r}: the reset probability is zero"
        suggestion = "Choose p > 0 or q > 0 so that at least one branch resets"
        super().__init__(message, suggestion)


class PartitionError(BranchSimError):
    """Raised when the macrostate count cannot realize the requested partition."""

    def __init__(self, reason: str):
        message = f"Cannot build the macrostate partition: {reason}"
        suggestion = (
            "1. Increase macrostate_count, or leave it unset for the minimal construction\n"
            "2. Keep backup_index below macrostate_count"
        )
        super().__init__(message, suggestion)


class ScheduleError(BranchSimError):
    """Raised for malformed schedules or mismatched trace sets."""

    def __init__(self, reason: str):
        super().__init__(f"Invalid schedule: {reason}")


class OutcomeInvariantError(BranchSimError):
    """Raised when a cycle outcome reports a disaster readout without a reset, or the reverse."""

    def __init__(self, reset_occurred: bool, disaster_after_reset: bool | None):
        message = (
            f"Inconsistent cycle outcome: reset_occurred={reset_occurred} "
            f"with disaster_after_reset={disaster_after_reset}"
        )
        suggestion = (
            "1. Pass disaster_after_reset=None when no reset occurred\n"
            "2. Pass a True/False disaster readout whenever the branch was reset"
        )
        super().__init__(message, suggestion)


class ConfigurationError(BranchSimError):
    """Raised when configuration is invalid or missing."""

    def __init__(self, config_key: str, expected_value: str = ""):
        message = f"Configuration error: {config_key} is missing or invalid"
        if expected_value:
            message += f" (expected: {expected_value})"
        suggestion = (
            f"1. Check the value given for {config_key} on the command line\n"
            f"2. Check the key=value config file passed with --config\n"
            f"3. Check BRANCHSIM_* variables in the environment or .env file"
        )
        super().__init__(message, suggestion)


class FileOperationError(BranchSimError):
    """Raised when file I/O operations fail."""

    def __init__(self, operation: str, file_path: str, original_error: str = ""):
        message = f"File operation '{operation}' failed for '{file_path}'"
        if original_error:
            message += f": {original_error}"
        suggestion = (
            f"1. Verify the file/directory path exists: {file_path}\n"
            f"2. Check file permissions (read/write as needed)\n"
            f"3. Verify disk space is available"
        )
        super().__init__(message, suggestion)
