"""Exception types shared across the package."""


class GjjError(Exception):
    """Base class for all library errors."""


class DomainError(GjjError):
    """Parameter or numerical value outside the valid domain."""


class DegenerateJunctionError(GjjError):
    """Junction with no conducting Andreev modes."""


class SupercriticalError(GjjError):
    """Coupling at or beyond the critical point where the effective gap closes."""


class TruncationError(GjjError):
    """Fock-space truncation too small for the requested state or evolution."""

    def __init__(self, message: str, leakage: float = float("nan")):
        super().__init__(message)
        self.leakage = leakage


class DegenerateSpectrumError(GjjError):
    """Eigenbasis dissipators requested for a (near-)degenerate spectrum."""

    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        super().__init__(message)
        self.pair = pair


class StiffnessError(GjjError):
    """Integrator step size underflow."""


class DegenerateSteadyStateError(GjjError):
    """Liouvillian null space is not one-dimensional."""


class UnstableRegimeError(GjjError):
    """No physical steady state (positive spectral abscissa / non-positive solve)."""


class FitError(GjjError):
    """Not enough usable data for a fit."""


class ConfigError(GjjError):
    """Invalid experiment configuration."""
