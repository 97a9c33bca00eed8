"""Exception hierarchy shared by every caplab module."""


class CaplabError(Exception):
    """Base class for all library errors."""


class InvalidSpecError(CaplabError, ValueError):
    """A body or profile specification is malformed.

    ``pointer`` is a JSON-pointer-like path to the offending key, when known.
    """

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.message = message
        self.pointer = pointer


class InvalidInputError(CaplabError, ValueError):
    pass


class UnsupportedBodyError(CaplabError):
    pass


class WrongConvexityError(CaplabError):
    pass


class TruncationError(CaplabError):
    """A finite capacity sequence is too short to determine the requested term."""


class InvariantViolation(CaplabError):
    pass


class SolverDidNotConverge(CaplabError):
    """Raised by the loop-space solver; carries the best value reached."""

    def __init__(self, message, best_capacity=None, grad_norm=None):
        super().__init__(message)
        self.best_capacity = best_capacity
        self.grad_norm = grad_norm
