"""Exception types shared across the package.

Everything raised on purpose derives from MonocatError, so callers (the CLI
and the HTTP service in particular) can catch domain problems in one place
without swallowing genuine bugs.
"""


class MonocatError(Exception):
    """Base class for all errors this package raises deliberately."""


class ModelError(MonocatError, ValueError):
    """A model description or model file breaks an invariant."""


class DatasetError(MonocatError, ValueError):
    """An answer matrix or dataset file is malformed."""


class CapacityError(MonocatError, RuntimeError):
    """The requested exact computation is too large to enumerate."""


class ContradictionError(MonocatError, ValueError):
    """Evidence with probability zero under the model."""


class SessionError(MonocatError, ValueError):
    """Invalid operation on a test session."""


class DuplicateAnswerError(SessionError):
    """The same question was answered twice in one session."""


class LearnError(MonocatError, RuntimeError):
    """Parameter fitting failed or was configured impossibly."""
