"""
Exception hierarchy.

Validation-class errors subclass ``ValueError`` (CLI exit code 1);
runtime-class errors subclass ``RuntimeError`` (CLI exit code 2).
"""
from __future__ import annotations


class OpenFERError(Exception):
    """Root of every error raised on purpose by this package."""


# ── validation ────────────────────────────────────────────────────────────
class ConfigError(OpenFERError, ValueError):
    pass


class IngestionError(OpenFERError, ValueError):
    def __init__(self, message: str, path=None, row: int | None = None):
        super().__init__(message)
        self.path = path
        self.row = row


class SchemaError(OpenFERError, ValueError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class ProtocolError(OpenFERError, ValueError):
    pass


class ContractError(OpenFERError, ValueError):
    pass


class MetricError(OpenFERError, ValueError):
    pass


class CalibrationError(OpenFERError, ValueError):
    pass


class CompatibilityError(OpenFERError, ValueError):
    pass


class PlotError(OpenFERError, ValueError):
    pass


# ── runtime ───────────────────────────────────────────────────────────────
class DivergenceError(OpenFERError, RuntimeError):
    def __init__(self, message: str, component: str):
        super().__init__(message)
        self.component = component


class WeightsDownloadError(OpenFERError, RuntimeError):
    pass
