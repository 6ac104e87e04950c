"""Exception types shared across the solver modules."""

from .model import InvalidParamsError

__all__ = [
    "InvalidParamsError",
    "ConvergenceError",
    "InvariantViolationError",
    "NonMonotoneQuoteError",
]


class ConvergenceError(RuntimeError):
    """An iterative solve hit its iteration cap without meeting tolerance."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history if history is not None else []


class InvariantViolationError(RuntimeError):
    """A structural property of the output failed validation."""

    def __init__(self, message, prop=None, node=None):
        super().__init__(message)
        self.prop = prop
        self.node = node


class NonMonotoneQuoteError(InvariantViolationError):
    """Per-node feedback quotes did not form a monotone unit-step curve."""


class SimulationTruncationError(RuntimeError):
    """Too many simulated paths were cut off at the time horizon."""
