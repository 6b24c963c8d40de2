"""Exception hierarchy shared across the package."""


class OGMError(Exception):
    """Base class for every error raised by :mod:`ogm`."""


class DimensionError(OGMError, ValueError):
    """Operands disagree on qubit count or state dimension."""


class ParseError(OGMError, ValueError):
    """Malformed Pauli text, ``.ham`` line or JSON document."""


class IncompatibleError(OGMError, ValueError):
    """Two Pauli strings were joined although they are not compatible."""


class PlanError(OGMError, ValueError):
    """A measurement plan violates its invariants or does not match the request."""


class EmptyPlanError(PlanError):
    """A plan was requested for an observable without terms."""


class SolverError(OGMError, RuntimeError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
