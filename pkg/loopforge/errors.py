"""Exception hierarchy.

Every error raised on purpose by loopforge derives from ``LoopforgeError`` and
carries the process exit code the command line maps it to.
"""


class LoopforgeError(Exception):
    """Base class for all loopforge errors."""

    exit_code = 1


class ConfigError(LoopforgeError, ValueError):
    """Invalid configuration file, flag value or unknown key."""

    exit_code = 2


class AlgebraError(LoopforgeError, ValueError):
    """Tag or dimension mismatch, zero divisor, or singular quotient system."""


class InvalidLieElementError(AlgebraError):
    """Input is not in the Lie algebra, or a pseudoautomorphism pair is invalid."""


class ConsistencyError(LoopforgeError):
    """Two independent evaluation paths disagree beyond tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class NumericsError(LoopforgeError, ArithmeticError):
    """Non-finite samples or a diverging integration."""


class LineSearchError(NumericsError):
    """Backtracking failed to find a step that decreases the energy."""
