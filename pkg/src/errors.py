"""
Error hierarchy shared by the library and the CLI.

Validation failures map to exit code 1, computation failures to exit code 2.
"""
from typing import Any, Dict, Optional


class ErfundError(Exception):
    """Base class for every error raised on purpose by this package."""

    exit_code = 1

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        value: Any = None,
    ):
        self.message = message
        self.path = path
        self.line = line
        self.value = value
        super().__init__(self._format())

    def _format(self) -> str:
        location = []
        if self.path:
            location.append(str(self.path))
        if self.line is not None:
            location.append(f"line {self.line}")
        prefix = ":".join(location)
        suffix = f" (value: {self.value!r})" if self.value is not None else ""
        return f"{prefix}: {self.message}{suffix}" if prefix else f"{self.message}{suffix}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "path": self.path,
            "line": self.line,
            "value": None if self.value is None else str(self.value),
        }


class ValidationFailure(ErfundError):
    """Bad input: malformed files, unknown labels, out-of-range numbers."""

    exit_code = 1


class CalibrationError(ValidationFailure):
    """History cannot be turned into a likelihood or belief matrix."""


class ComputationFailure(ErfundError):
    exit_code = 2


class CompleteConflictError(ComputationFailure):
    """All in-frame mass was annihilated by combination."""


class NoEffectiveEvidenceError(ComputationFailure):
    """Nothing is left to combine once vacuous evidence is dropped."""
