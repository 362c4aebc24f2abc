"""
Exception types raised by the solvers and experiments
"""
from typing import Optional


class NltorsionError(Exception):
    """Base class; `detail` holds the message shown to CLI users"""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DomainError(NltorsionError):
    """Invalid shape parameters or a point outside the domain"""


class MaskError(NltorsionError):
    """Grid discretization cannot be built (spacing too coarse, empty interior)"""


class ConvergenceError(NltorsionError):
    """An iterative solver exhausted its budget"""

    def __init__(self, detail: str, residual: float, iterations: int):
        super().__init__(detail)
        self.residual = residual
        self.iterations = iterations


class StabilityError(NltorsionError):
    """Upwind discretization is outside its admissible range (cap * h too large)"""


class PolicyMonotonicityError(NltorsionError):
    """A policy-iteration sweep decreased the solution"""

    def __init__(self, detail: str, decrease: float, sweep: int, allowed: Optional[float] = None):
        super().__init__(detail)
        self.decrease = decrease
        self.sweep = sweep
        self.allowed = allowed


class SimulationError(NltorsionError):
    """Monte Carlo pre-condition violated or time budget exceeded"""


class ExperimentError(NltorsionError):
    """An experiment's hypothesis or qualitative assertion failed"""
