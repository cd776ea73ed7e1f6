"""Exceptions for Bear Raid Detection."""

from __future__ import annotations


class BearRaidError(Exception):
    """Base error for invalid input or an analysis that cannot proceed."""


class ConfigError(BearRaidError):
    """Invalid run configuration or synthetic spec."""


class MarketDataError(BearRaidError):
    """Ingestion or alignment failure."""

    def __init__(
        self, message: str, *, line: int | None = None, source: str | None = None
    ) -> None:
        self.line = line
        self.source = source
        prefix = ""
        if source:
            prefix = f"{source}:"
        if line is not None:
            prefix = f"{prefix}{line}: " if source else f"line {line}: "
        elif prefix:
            prefix = f"{prefix} "
        super().__init__(f"{prefix}{message}")


class MetricsError(BearRaidError):
    """A metric is requested outside its domain."""


class FitError(BearRaidError):
    """A tail fit could not be produced."""

    def __init__(self, message: str, *, residual: float | None = None) -> None:
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.6g})"
        super().__init__(message)


class FitDomainError(FitError):
    """A fitted model was evaluated outside its support."""


class DetectorError(BearRaidError):
    """Detector operation failed on its inputs."""


class SyntheticError(BearRaidError):
    """Synthetic generation received an impossible spec."""
