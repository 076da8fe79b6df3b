"""Exception types shared across the package."""


class ParseError(ValueError):
    """A dataset or solution file is not structurally readable."""


class InvalidProblemError(ValueError):
    """A problem, solution, or configuration violates a documented invariant."""


class CameraMismatchError(InvalidProblemError):
    """A solution does not cover the same camera set as the problem."""


class DegenerateInputError(ValueError):
    """A matrix is numerically singular where an invertible one is required."""


class DegenerateMotionError(RuntimeError):
    """The measured motion does not pin down a unique solution.

    Raised when the rotation system's nullspace is ambiguous (singular-value
    ratio test) or the translation normal equations are rank deficient.
    """

    def __init__(self, message: str, ratio: float | None = None):
        super().__init__(message)
        self.ratio = ratio
