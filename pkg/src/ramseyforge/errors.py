"""Exception hierarchy shared by every module."""


class RamseyForgeError(Exception):
    pass


class DomainError(RamseyForgeError, ValueError):
    """An argument lies outside the domain of the operation."""


class ArityError(RamseyForgeError, ValueError):
    pass


class PreconditionError(RamseyForgeError, ValueError):
    """Input violates a documented precondition (e.g. non-increasing tuple)."""


class RefusedTooLarge(RamseyForgeError):
    """The requested computation exceeds a configured size cap.

    ``estimate`` carries the size estimate that triggered the refusal and
    ``achievable`` optionally describes parameters that would be accepted.
    """

    def __init__(self, message, estimate=None, achievable=None):
        super().__init__(message)
        self.estimate = estimate
        self.achievable = achievable


class ConstructionError(RamseyForgeError):
    """A construction failed its own post-verification. Should never fire."""


class UndeterminedPattern(RamseyForgeError):
    pass


class ShortInput(RamseyForgeError):
    """Input too short to reach the requested length; carries the partial result."""

    def __init__(self, message, achieved=0, partial=None):
        super().__init__(message)
        self.achieved = achieved
        self.partial = partial
