"""Exception types shared across the package."""
from __future__ import annotations


class PinsyncError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PinsyncError, ValueError):
    """Array shapes are inconsistent (non-square matrix, size mismatch, bad index)."""


class DomainError(PinsyncError, ValueError):
    """A scalar argument lies outside its admissible range."""


class StructureError(PinsyncError, ValueError):
    """A coupling matrix fails the structural class required by the operation."""


class RegimeError(PinsyncError, ValueError):
    """The requested operation does not apply to this synchronization regime."""


class ConfigError(PinsyncError, ValueError):
    """A run configuration file could not be parsed or is internally inconsistent."""


class DivergenceError(PinsyncError, RuntimeError):
    """Integration produced a non-finite state.

    Attributes:
        blow_up_time: first recorded time at which the state was non-finite.
    """

    def __init__(self, blow_up_time: float):
        self.blow_up_time = blow_up_time
        super().__init__(f"state became non-finite at t={blow_up_time:.6g}")
