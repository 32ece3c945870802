"""
Error hierarchy for gaugelab.

Every failure raised by the library derives from ``GaugeLabError`` so the
command line can map it to an exit code. Errors that signal a bad argument
also derive from ``ValueError``.
"""


class GaugeLabError(Exception):
    """Base class for all library errors."""


class DomainError(GaugeLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class DensityError(GaugeLabError, ValueError):
    """A density cannot be evaluated at the requested point."""


class DecompositionError(GaugeLabError):
    """The linear decomposition constraint system has no solution."""


class IntegrationError(GaugeLabError):
    """Base class for ODE integration failures."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} (t={t_fail:.6g})")
        self.t_fail = t_fail


class StiffnessError(IntegrationError):
    """The adaptive step size underflowed."""


class DivergenceError(IntegrationError):
    """The state or an augmented quantity became non-finite."""


class LemmaError(GaugeLabError):
    """The eigenvalue formula was requested for a field it does not cover."""


class EstimationError(GaugeLabError):
    """Not enough data to estimate an intrinsic dimension."""


class ConfigError(GaugeLabError):
    """An invalid run configuration; carries the offending field paths."""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []
