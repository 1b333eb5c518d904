"""Exception types shared across the package.

Every error raised on a contract violation derives from GeodensError so
callers (and the CLI exit-code mapping) can distinguish our failures from
genuine bugs.
"""


class GeodensError(Exception):
    """Base class for all geodens errors."""


# linear algebra kernels

class SingularFrame(GeodensError):
    """Determinant power of a singular matrix with a non-positive real degree."""


class SpanMismatch(GeodensError):
    """Two frames passed to a change of basis do not span the same subspace."""


class RankDeficient(GeodensError):
    """Frame vectors are linearly dependent."""


class DegenerateCovectors(GeodensError):
    """Covector family is linearly dependent, no dual frame exists."""


# expression language

class ExprSyntaxError(GeodensError, SyntaxError):
    """Malformed expression source.  Carries the byte offset of the failure."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownFunction(GeodensError):
    """Call to a function outside the fixed catalog."""


class UnboundIdentifier(GeodensError):
    """Identifier with no binding at evaluation time."""


class DomainError(GeodensError):
    """Evaluation left the real domain (log of a non-positive value, etc.)."""


# geometry

class ImmersionFailure(GeodensError):
    """Chart jacobian loses rank somewhere on the sampled domain."""


class MissingImplicitForm(GeodensError):
    """Curved intersection requested without an implicit form to project onto."""


class NoIntersectionFound(GeodensError):
    """Intersection search found no common point."""


class UserChartRequired(GeodensError):
    """Positive-dimensional curved intersection needs a user-supplied chart."""


class ChartInversionFailure(GeodensError):
    """Newton iteration for chart coordinates did not stabilize."""


# densities, states, products

class DegreeMismatch(GeodensError):
    """Density degrees do not satisfy the operation's compatibility rule."""


class UnboundedDomain(GeodensError):
    """Integration domain is not a bounded box."""


class QuadratureNotConverged(GeodensError):
    """Doubled-order quadrature estimate exceeded the requested tolerance."""


class NotOnBothCores(GeodensError):
    """Product evaluation point does not lie on both cores."""


class TransversalityFailure(GeodensError):
    """Cores fail to be transverse where the operation needs them to be."""


class NonCompactIntersection(GeodensError):
    """Partial pairing over an intersection with no bounded integration box."""


# oracle

class NonAffineCore(GeodensError):
    """Mollification is only implemented for affine cores."""


class NonConvergent(GeodensError):
    """Oracle errors fail the convergence policy."""


# scenes

class SceneError(GeodensError):
    """Malformed or inconsistent scene description."""
