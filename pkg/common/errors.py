from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict


@dataclass
class AppError(Exception):
    code: str
    message: str
    data: Dict[str, Any]

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "data": self.data}


class ConfigError(AppError):
    def __init__(self, message: str = "Invalid configuration", data: Dict[str, Any] = None):
        super().__init__("config_error", message, data or {})


class InputError(AppError):
    def __init__(self, message: str = "Invalid input", data: Dict[str, Any] = None):
        super().__init__("input_error", message, data or {})


class IntegrationBlowupError(AppError):
    def __init__(self, message: str = "Non-finite state during integration", data: Dict[str, Any] = None):
        super().__init__("integration_blowup", message, data or {})


class ResourceLimitError(AppError):
    def __init__(self, message: str = "Resource limit exceeded", data: Dict[str, Any] = None):
        super().__init__("resource_limit", message, data or {})


class RefusalError(AppError):
    def __init__(self, message: str = "Request refused", data: Dict[str, Any] = None):
        super().__init__("refused", message, data or {})


class StageError(AppError):
    def __init__(self, stage: str, cause: AppError):
        super().__init__(
            "stage_failed",
            f"stage '{stage}' failed: {cause.message}",
            {"stage": stage, "cause": cause.code, **cause.data},
        )
        self.stage = stage
        self.cause = cause


class SignatureMismatchError(AppError):
    def __init__(self, message: str = "Betti signature not reproduced", data: Dict[str, Any] = None):
        super().__init__("signature_mismatch", message, data or {})


_USAGE_CODES = {"config_error", "input_error"}


def classify_exception(e: Exception) -> AppError:
    """
    Map arbitrary exceptions into stable error codes.
    """
    if isinstance(e, AppError):
        return e
    if isinstance(e, MemoryError):
        return ResourceLimitError(f"out of memory: {e}")
    if isinstance(e, (ValueError, TypeError, KeyError)):
        return InputError(str(e))
    if isinstance(e, FileNotFoundError):
        return InputError(f"file not found: {e}")
    return AppError("unknown_error", str(e), {})


def exit_code_for(e: Exception) -> int:
    """CLI exit code: 1 usage/config, 2 runtime/resource, 3 signature mismatch."""
    err = classify_exception(e)
    if err.code == "signature_mismatch":
        return 3
    code = err.data.get("cause", err.code) if err.code == "stage_failed" else err.code
    if code in _USAGE_CODES:
        return 1
    return 2
