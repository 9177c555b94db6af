"""Exception types raised by bottleflow."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class InadmissibleSignalError(ValueError):
    """A switching signal is not in the admissible set for the given parameters.

    The failing :class:`~bottleflow.signals.AdmissibilityReport` is kept on
    ``report`` so callers can inspect which condition was violated.
    """

    def __init__(self, report):
        self.report = report
        super().__init__("signal is not admissible: " + "; ".join(report.diagnostics))


class NumericalError(ArithmeticError):
    """A numerical procedure failed (non-convergence, state escape, ...)."""
