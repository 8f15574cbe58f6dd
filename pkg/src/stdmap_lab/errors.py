"""Exception hierarchy for stdmap-lab.

Precondition failures raise subclasses of StdmapLabError; the CLI maps
them to exit code 2 with the violated condition named.
"""

from __future__ import annotations


class StdmapLabError(Exception):
    """Base class for all stdmap-lab domain errors."""


class PrecisionDomainExceeded(StdmapLabError):
    """Raw slow-fast iteration requested outside the trusted range.

    The shear coefficient eps**-(1+alpha) must stay below 2**40 for the
    direct route; beyond that, use the conjugated route.
    """


class StripDegenerate(StdmapLabError):
    """Critical strips would merge or cover the circle at these (L, eta)."""


class ApertureDomain(StdmapLabError):
    """Cone-aperture formula evaluated outside its validity domain."""


class ZeroVector(StdmapLabError):
    """Cone membership asked for the zero vector."""


class CurveDomainError(StdmapLabError):
    """Point lies outside the curve's domain interval."""


class BracketError(StdmapLabError):
    """Root target not enclosed by the supplied bracket."""


class StripOverlap(StdmapLabError):
    """Density transport requested across a critical strip."""


class InvariantViolation(StdmapLabError):
    """A measure-pair class invariant failed a runtime check."""


class BudgetExceeded(StdmapLabError):
    """Exhaustive decomposition passed the configured curve-count cap."""


class QuadratureFailure(StdmapLabError):
    """Adaptive quadrature missed its error target at maximum depth."""


class ResolutionExceeded(StdmapLabError):
    """Oscillation budget for a pushforward integral exceeds the node cap."""


class NotMeanZero(StdmapLabError):
    """Observable expected to have zero mean on the circle."""


class EmptySample(StdmapLabError):
    """Statistic of an empty sample requested."""
