"""Exception hierarchy shared across connectlab.

The CLI maps each class to a process exit code.
"""


class ConnectLabError(Exception):
    exit_code = 1


class ValidationError(ConnectLabError, ValueError):
    """Input violates a documented precondition or invariant."""

    exit_code = 2


class NumericalError(ConnectLabError, ArithmeticError):
    """A numerical routine failed (non-convergence, indefinite pivot, divergence)."""

    exit_code = 3

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class AugmentationError(ConnectLabError, RuntimeError):
    """Augmentation could not produce an accepted sample within the retry budget."""

    exit_code = 4
