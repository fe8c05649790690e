"""Exception hierarchy and CLI exit codes."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_UNSTABLE = 3


class QflError(Exception):
    """Base class for every error raised by the numerics."""


class PoleError(QflError, ValueError):
    """Evaluation too close to a pole of the Drude permittivity."""


class ResonanceError(QflError, ValueError):
    """Evaluation on an exact surface or system resonance."""


class DomainError(QflError, ValueError):
    """Argument outside the domain of the model."""


class ConvergenceError(QflError, RuntimeError):
    """An iterative or adaptive procedure did not reach its tolerance."""


class NonConvergenceError(ConvergenceError):
    """Adaptive quadrature exhausted its subdivision budget."""

    def __init__(self, message: str, worst_interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.worst_interval = worst_interval


class BoundaryError(ConvergenceError):
    """The growth-rate maximiser sits on the upper end of the wavenumber scan."""


class NoSignChangeError(QflError, RuntimeError):
    """The stability functional keeps one sign over the whole search bracket."""


class IdentityViolationError(QflError, RuntimeError):
    """A symmetry identity of the Green's function failed its tolerance."""


class UnstableRegimeError(QflError, RuntimeError):
    """A steady-state quantity was requested for an unstable configuration."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code.

    Args:
        exc: Exception caught at the top level

    Returns:
        Exit code (1 usage, 2 numerical failure, 3 unstable-regime refusal)
    """
    if isinstance(exc, UnstableRegimeError):
        return EXIT_UNSTABLE
    if isinstance(exc, QflError):
        return EXIT_NUMERICAL
    if isinstance(exc, (ValueError, FileNotFoundError)):
        return EXIT_USAGE
    return EXIT_NUMERICAL
