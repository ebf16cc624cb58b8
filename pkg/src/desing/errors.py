"""Exception types shared across the toolkit.

Every domain error derives from DesingError so callers (and the CLI)
can distinguish validation problems from genuine bugs. Names follow
what went wrong, not where.
"""


class DesingError(Exception):
    """Base class for all toolkit errors."""


class ZeroVector(DesingError):
    """A direction was requested for a vector with norm below 1e-12."""


class DimensionMismatch(DesingError):
    """Operands live in different ambient dimensions, or a data row
    has the wrong number of coordinates."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class NonPositiveScale(DesingError):
    """A scale parameter (lambda, radius, temperature) must be > 0."""


class NonFiniteValue(DesingError):
    """NaN or Inf found in ingested data."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class MalformedHeader(DesingError):
    """A binary or text input file does not match its declared format."""


class InvalidGrid(DesingError):
    """A radius grid violates its invariants (ordering, positivity, size)."""


class InsufficientNeighbors(DesingError):
    """Too few points inside the ball to support a slope estimate."""


class UndefinedAtRadius(DesingError):
    """A dimension sample was requested at a radius where it is undefined."""


class NoDefinedSamples(DesingError):
    """A profile holds fewer than two defined dimension samples, so the
    singularity test cannot run; the verdict is undetermined."""


class EmptyNeighborhood(DesingError):
    """No points (other than the center itself) inside the locality radius."""


class DegenerateCenter(DesingError):
    """Every point of the cloud coincides with the blow-up center."""


class EmptyContext(DesingError):
    """A context window holds no vectors."""


class ZeroAggregate(DesingError):
    """Aggregated context summed to (numerically) zero, so no direction
    can be extracted. Surfaced instead of fabricating a direction."""


class MissingContext(DesingError):
    """A singular token was embedded without a usable context window."""


class OffManifold(DesingError):
    """A queried point lies on no recorded ground-truth component."""


class UnknownSingularPoint(DesingError):
    """The queried location is not one of the generator's singular points."""


class InfeasibleSpec(DesingError):
    """The requested synthetic geometry cannot be realized (for example,
    too many well-separated subspaces for the ambient dimension)."""
