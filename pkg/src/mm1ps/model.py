"""Value types and exceptions shared across the package."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class MM1PSError(Exception):
    """Base class for all package errors."""


class DomainError(MM1PSError, ValueError):
    """An argument lies outside the domain of the requested formula."""


class ConvergenceError(MM1PSError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class SolverError(MM1PSError, ArithmeticError):
    """A root solver could not bracket or converge to the requested root."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class PoleProximityError(MM1PSError, ArithmeticError):
    """A transform was evaluated (numerically) on top of one of its poles."""


class UnsupportedOrderError(MM1PSError, ValueError):
    """Parabolic cylinder function requested at an order outside the supported range."""


class RunawayError(MM1PSError, RuntimeError):
    """A simulation exceeded its event budget."""


@dataclass(frozen=True)
class ModelParams:
    """M/M/1-PS queue with unit service rate and traffic intensity ``rho``."""

    rho: float

    def __post_init__(self):
        if not (isinstance(self.rho, (int, float)) and math.isfinite(self.rho)):
            raise DomainError(f"rho must be a finite real, got {self.rho!r}")
        if not 0.0 < self.rho < 1.0:
            raise DomainError(f"stability requires 0 < rho < 1, got {self.rho}")

    @property
    def epsilon(self) -> float:
        return 1.0 - self.rho

    @property
    def sqrt_rho(self) -> float:
        return math.sqrt(self.rho)

    @property
    def s_minus(self) -> float:
        """Right-hand branch point -(1 - sqrt(rho))**2 of the square root in r(s)."""
        return -((1.0 - self.sqrt_rho) ** 2)

    @property
    def s_plus(self) -> float:
        """Left-hand branch point -(1 + sqrt(rho))**2."""
        return -((1.0 + self.sqrt_rho) ** 2)

    @classmethod
    def heavy(cls, eps: float) -> "ModelParams":
        return cls(1.0 - eps)


CONTOURS = ("fixed-talbot", "shifted-bromwich-euler")


@dataclass(frozen=True)
class InversionConfig:
    """Settings for numerical Laplace inversion.

    ``abscissa_shift`` moves the contour so that it sits relative to
    ``s = shift`` instead of ``s = 0``. ``None`` means "choose automatically"
    (the dominant singularity of the transform, when known).
    """

    contour: str = "fixed-talbot"
    nodes: int = 48
    abscissa_shift: float | None = None
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.contour not in CONTOURS:
            raise DomainError(f"unknown contour {self.contour!r}; expected one of {CONTOURS}")
        if int(self.nodes) != self.nodes or self.nodes < 16:
            raise DomainError(f"nodes must be an integer >= 16, got {self.nodes}")
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")


@dataclass(frozen=True)
class DensityValue:
    """One evaluation of a sojourn-time density.

    ``continuous`` is the density of the absolutely continuous part, ``atom``
    the probability mass sitting at ``t = x`` (zero unless that point was
    asked for), and ``regime`` names the formula that produced the number.
    ``err_est`` is an error estimate where the method provides one, and
    ``extra`` carries method-specific side quantities (e.g. a short-scale
    mass deficit).
    """

    continuous: float
    atom: float = 0.0
    regime: str = ""
    err_est: float = math.nan
    clamped: bool = False
    extra: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.continuous)
