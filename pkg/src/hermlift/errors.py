"""Exception types shared across the package."""


class HermliftError(Exception):
    """Base class for all package errors."""


class UnsupportedDiscriminant(HermliftError):
    """D is not one of the supported prime discriminants."""


class NotSplit(HermliftError):
    """The prime does not split in the imaginary quadratic field."""


class PrecisionUnderflow(HermliftError):
    """A series operation would leave fewer than one valid exponent slot."""


class ParityMismatch(HermliftError):
    """Eisenstein character pair has the wrong parity for the weight."""


class UnsupportedWeight(HermliftError):
    """Dimension formula requested outside its range of validity."""


class SaturationFailure(HermliftError):
    """Eisenstein products failed to span the space certified by the oracle."""


class NotDiagonalizable(HermliftError):
    """Simultaneous eigenbasis could not be produced (implementation bug)."""


class NotNewform(HermliftError):
    """Operation requires a newform of level exactly D (or Dp, p-multiplicative)."""


class InsufficientPrecision(HermliftError):
    """Expansion too short to certify the requested property."""


class NotOrdinary(HermliftError):
    """The Hecke eigenvalue at p is not a p-adic unit under the embedding."""


class EmbeddingAmbiguity(HermliftError):
    """Several primes above p; the configuration must select one."""


class NotInSpan(HermliftError):
    """Vector does not lie in the span of the supplied basis."""


class NotPlusSpace(HermliftError):
    """Input expansion has a nonzero coefficient at an index with chi = +1."""


class PrerequisiteFailed(HermliftError):
    """A stated precondition (e.g. the twist identity) failed to verify."""


class LevelMismatch(HermliftError):
    """Matrix does not belong to the congruence subgroup for this level."""


class SingularMatrix(HermliftError):
    """Theta transformation matrix was not invertible (implementation bug)."""


class ZeroIndex(HermliftError):
    """The content of the zero matrix is undefined."""


class InsufficientAlphaCap(HermliftError):
    """Jacobi coefficient table too short for the requested Hermitian bound."""


class BadLevel(HermliftError):
    """Hecke operator at p requires p to divide the level."""


class OutOfRange(HermliftError):
    """Requested index lies outside the stored table window."""


class DivisibleByP(HermliftError):
    """Teichmueller lift requires an argument prime to p."""


class NoBranch(HermliftError):
    """No eigenform matches the anchor branch residually."""


class AmbiguousBranch(HermliftError):
    """More than one eigenform/embedding matches the anchor branch."""


class CrossCheckFailure(HermliftError):
    """Independently computed values disagree."""


class SchemaViolation(HermliftError):
    """Input file does not match the documented schema."""
