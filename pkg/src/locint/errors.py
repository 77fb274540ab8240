"""Error taxonomy.

Every failure mode of the library raises one of these; nothing fails softly.
The hierarchy is flat on purpose — callers dispatch on the concrete class.
"""


class LocintError(Exception):
    """Base class for all library errors."""


# -- arithmetic layer
class ImpreciseZero(LocintError):
    """A valuation was requested on a residue that vanishes to working
    precision without being a known exact zero."""


class NotAUnit(LocintError):
    """Character or inversion requested on a non-unit."""


class PrecisionExhausted(LocintError):
    """An operation could not be certified at the working precision."""


# -- quadratic form layer
class SingularMatrix(LocintError):
    """det = 0; the fundamental matrix must be nonsingular."""


class Inadmissible(LocintError):
    """The representability sign is +1, so no intersection number is attached."""


# -- oracle layer
class BudgetExceeded(LocintError):
    """Estimated enumeration cost exceeds the configured budget."""


class NoStabilization(LocintError):
    """The truncated density counts never certified a stable value."""


# -- building layer
class InconsistentDeterminant(LocintError):
    """The semilinear action's determinant valuation disagrees with the
    endomorphism's q-valuation (signals a construction bug)."""


class ShapeViolation(LocintError):
    """A fixed locus matched neither the edge-midpoint nor the subtree shape."""


class RadiusTooSmall(LocintError):
    """The tree ball cannot contain the requested divisor or locus."""


class SearchExhausted(LocintError):
    """The orthogonal-triple search ran out of candidates within its box."""


class GeometryViolation(LocintError):
    """A pair of fixed loci matched none of the expected joint geometries."""


# -- intersection layer
class NotInAmbient(LocintError):
    """A line outside the ambient difference divisor was used in a pairing."""


class UnsupportedConfiguration(LocintError):
    """The combinatorial path cannot evaluate this configuration; the
    case-table and closed paths remain available."""


class NoCaseMatches(LocintError):
    """No case of the second-difference table applies, even after the
    unit-rescaling reduction."""


class ConsistencyViolation(LocintError):
    """Two computation paths disagree.  Carries both values."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values
