"""Exception types shared across the package."""


class BlockVARError(Exception):
    """Base class for all package errors."""


class InvalidArgument(BlockVARError, ValueError):
    pass


class DegenerateInput(InvalidArgument):
    """Random construction could not produce a usable draw."""


class RankDeficiency(BlockVARError, ValueError):
    """A matrix that must be inverted is (numerically) singular."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class NumericalBreakdown(BlockVARError, ArithmeticError):
    pass


class ConvergenceFailure(BlockVARError, RuntimeError):
    """Iteration cap reached; ``last_iterate`` holds the final state."""

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class TuningFailure(BlockVARError, RuntimeError):
    """Every point of a tuning lattice failed; ``errors`` maps points to messages."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or []
