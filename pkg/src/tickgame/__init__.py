"""Numerical solver for the tick-constrained buyer-seller quoting and
stopping game: equilibrium value functions, integer quote curves, stopping
regions, and the tick-size inefficiency measure, cross-checked by dynamic
programming, analytic (concave-majorant) and Monte-Carlo oracles.
"""

from .errors import (
    ConvergenceError,
    InvalidParamsError,
    InvariantViolationError,
    NonMonotoneQuoteError,
)
from .model import ModelParams, NoiseDist, uniform_noise
from .periodic import QuoteFn, ShiftGridFn, identity_grid
from .equilibrium import (
    Equilibrium,
    SweepResult,
    crossing_size,
    solve_equilibrium,
    stopping_region,
    tick_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "InvalidParamsError",
    "InvariantViolationError",
    "NonMonotoneQuoteError",
    "ModelParams",
    "NoiseDist",
    "uniform_noise",
    "QuoteFn",
    "ShiftGridFn",
    "identity_grid",
    "Equilibrium",
    "SweepResult",
    "crossing_size",
    "solve_equilibrium",
    "stopping_region",
    "tick_sweep",
    "__version__",
]
