"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`BsakitError`
so callers (and the CLI) can map failures to exit codes by class.
"""


class BsakitError(ValueError):
    """Base class for all library errors."""


# linear algebra
class NotHermitian(BsakitError):
    pass


class NotPsd(BsakitError):
    pass


class NoConvergence(BsakitError, ArithmeticError):
    pass


class DependentSet(BsakitError):
    pass


# states
class InvalidState(BsakitError):
    pass


class InvalidProbabilities(InvalidState):
    pass


# decomposition
class NotEntangled(BsakitError):
    pass


class PureInput(BsakitError):
    pass


class NotOnBoundary(BsakitError):
    pass


class DegeneratePair(BsakitError):
    pass


class CertificateFailed(BsakitError):
    """Raised when an optimality certificate has a residual above tolerance.

    The offending certificate is attached as ``certificate``.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


# local filtering
class InvalidMap(BsakitError):
    pass


class Annihilated(BsakitError):
    pass


class NotInvertible(BsakitError):
    pass


# oracle
class Infeasible(BsakitError):
    pass


# input files
class ParseError(BsakitError):
    """Malformed input: bad JSON or a missing/ill-shaped field."""
