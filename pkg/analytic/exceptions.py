"""Structured errors shared by the analytic, throughput, simulate and cli apps."""

from typing import Optional, Tuple


class CapacityError(ValueError):
    """Base class for every error raised by the toolkit"""


class DomainError(CapacityError):
    """An argument lies outside the domain of the operation"""


class ConfigError(CapacityError):
    """An experiment configuration is incomplete or inconsistent"""


class ConvergenceError(CapacityError):
    """A truncated series did not reach its tail threshold within the cap"""

    def __init__(self, message: str, tail_mass: Optional[float] = None, terms: Optional[int] = None):
        super().__init__(message)
        self.tail_mass = tail_mass
        self.terms = terms


class NoRootError(CapacityError):
    """A sign-changing bracket could not be established"""


class QuadratureError(CapacityError):
    """Adaptive quadrature stopped before meeting the requested tolerance"""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative tolerance {achieved:.3g})")
        self.achieved = achieved


class SaturationError(CapacityError):
    """The contending-node airtime fills the channel (N·x >= 1)"""


class NoSolutionError(CapacityError):
    """A fixed-point map has no root inside its bracket"""

    def __init__(self, message: str, bracket: Tuple[float, float]):
        super().__init__(f"{message} (bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])")
        self.bracket = bracket


class DeadEndError(CapacityError):
    """No forward neighbor within transmission range"""


class AllCensoredError(CapacityError):
    """Every Monte Carlo trial was discarded as disconnected"""
