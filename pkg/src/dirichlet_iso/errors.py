"""Exception hierarchy.

Two families matter to callers: ``ValidationError`` for malformed input
(bad shapes, negative weights, schema problems) and ``RejectionError`` for
well-formed input that fails a mathematical requirement (an operator that
does not intertwine, a function that is not excessive, ...). The CLI maps
them to exit codes 1 and 2.
"""


class DirichletError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DirichletError, ValueError):
    """Input does not satisfy a structural invariant."""


class SchemaError(ValidationError):
    """An instance file does not match the expected layout."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class RejectionError(DirichletError):
    """Well-formed input rejected on mathematical grounds."""


class NotInvariantError(RejectionError):
    pass


class NotExcessiveError(RejectionError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class NotIntertwiningError(RejectionError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NotUnitaryError(RejectionError):
    pass


class ComponentNormError(NotIntertwiningError):
    """The scaling ratio is not constant on an irreducible component."""


class ReconstructionError(RejectionError):
    """A factorization does not reproduce the operator it claims to factor."""
