"""Exception types shared across the package."""

from __future__ import annotations


class ConvexSliceError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedDimension(ConvexSliceError):
    """Ambient dimension outside the supported range for the operation."""


class DimensionMismatch(ConvexSliceError):
    """Inputs with inconsistent ambient dimensions."""


class DegenerateBody(ConvexSliceError):
    """Vertex set does not span a full-dimensional convex body."""


class DegenerateFlat(ConvexSliceError):
    """Point tuple does not span a (d-1)-dimensional affine hyperplane."""


class EmptySection(ConvexSliceError):
    """A required body/hyperplane section is empty beyond tolerance."""


class NotWellSeparated(ConvexSliceError):
    """Family fails the well-separation precondition."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ToleranceUnreachable(ConvexSliceError):
    """Requested tolerance is below the measure's quadrature error bound."""


class NoConvergence(ConvexSliceError):
    """Solver failed to reach the residual tolerance from every start."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class NoIntersection(ConvexSliceError):
    """Lifted hyperplane does not correspond to a real sphere."""


class VerticalSolution(ConvexSliceError):
    """Lifted solution is (numerically) vertical: no sphere, only a halfspace."""

    def __init__(self, message: str, halfspace=None):
        super().__init__(message)
        self.halfspace = halfspace


class SchemaError(ConvexSliceError):
    """Instance/result document violates the JSON schema."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class GenerationFailed(ConvexSliceError):
    """Random instance generator exhausted its attempt budget."""
