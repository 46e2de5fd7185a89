"""
Exceptions raised by the calculus package.

All of them derive from `CalculusError`, which is itself a `ValueError`, so
callers that only care about bad input can keep catching `ValueError`.
"""


class CalculusError(ValueError):
    """Base class for every failure raised by the calculus package."""


class GeometryError(CalculusError):
    """Invalid resolution, unknown cell id, bad CellSet or a point outside the domain."""


class BasisError(CalculusError):
    """Failure while building or using a GammaBasis."""


class ProjectionError(CalculusError):
    """A projected function could not be evaluated at a Γ point."""


class IndefiniteFormError(CalculusError):
    """The pointwise product produced a negative self product."""


class OperatorError(CalculusError):
    """Derivative assembly or application failed."""


class SolverError(CalculusError):
    """A linear or variational solve failed."""


class SpecificationError(CalculusError):
    """A variational problem or oracle was given inadmissible parameters."""
