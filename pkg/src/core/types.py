from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, Optional


@dataclass
class Result:
    """Envelope for one unit of batch work (a sweep row, a CLI command, a fit start)."""
    success: bool
    output: Any = None
    display_output: Optional[str] = None
    metrics: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @staticmethod
    def ok(output: Any = None, display_output: Optional[str] = None,
           metrics: Optional[Dict[str, Any]] = None) -> "Result":
        return Result(
            success=True,
            output=output,
            display_output=display_output,
            metrics=metrics or {},
        )

    @staticmethod
    def fail(error: str, output: Any = None, display_output: Optional[str] = None,
             metrics: Optional[Dict[str, Any]] = None) -> "Result":
        return Result(
            success=False,
            output=output,
            display_output=display_output or f"failed: {error}",
            metrics=metrics or {},
            error=error,
        )


class PolaritonError(Exception):
    pass


class PreconditionError(PolaritonError, ValueError):
    """An argument violates an operation's precondition."""


class MaterialRangeError(PolaritonError, ValueError):
    """Energy outside the validity range of a tabulated material."""

    def __init__(self, energy: float, lo: float, hi: float):
        self.energy, self.lo, self.hi = energy, lo, hi
        super().__init__(
            f"energy {energy:.6g} eV outside tabulated range [{lo:.6g}, {hi:.6g}] eV"
        )


class EvaluationError(PolaritonError):
    """Non-finite amplitudes out of the layer recursion."""

    def __init__(self, message: str, energy: Optional[float] = None, kx: Optional[float] = None):
        self.energy, self.kx = energy, kx
        where = ""
        if energy is not None:
            where = f" at E={energy:.6g} eV, kx={kx:.6g} um^-1"
        super().__init__(message + where)


class NoSolutionError(PolaritonError):
    pass


class SolverError(PolaritonError):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class NoAnticrossingError(PolaritonError):
    pass


class FitError(PolaritonError):
    pass


class ConfigError(PolaritonError):
    """Malformed run configuration; `line` points into the config file when known."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path, self.line = path, line
        prefix = ""
        if path:
            prefix = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(prefix + message)
