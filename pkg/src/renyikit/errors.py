"""Exception types shared across the package.

Every failure mode that callers may want to catch selectively gets its own
class; anything else surfaces as a plain ValueError from validation code.
"""


class RenyikitError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(RenyikitError):
    """Vector or point dimension does not match the expected d."""


class DuplicatePoints(RenyikitError):
    """Two samples coincide exactly; k-NN distances would degenerate to 0.

    Deduplicate the input or jitter it yourself before building the index.
    """

    def __init__(self, i, j):
        self.i, self.j = i, j
        super().__init__(
            f"samples {i} and {j} coincide exactly; deduplicate or jitter the input"
        )


class IndexOutOfRange(RenyikitError):
    """Sample index outside [0, n)."""


class MTooLarge(RenyikitError):
    """Requested neighbor count exceeds n - 1."""


class BadCorrelation(RenyikitError):
    """Correlation parameter outside (-1, 1)."""


class BiasMismatch(RenyikitError):
    """Debiasing entry key disagrees with the estimator configuration."""


class NonFinite(RenyikitError):
    """A computed quantity evaluated to Inf/NaN."""

    def __init__(self, message, trial=None):
        self.trial = trial
        super().__init__(message)


class SingularExcess(RenyikitError):
    """More than the tolerated fraction of Monte Carlo trials needed
    covariance regularization."""


class SingularSigma(RenyikitError):
    """Local covariance numerically singular and regularization disabled."""


class AlphaOne(RenyikitError):
    """Entropy transform undefined at alpha = 1."""


class NonPositiveJ(RenyikitError):
    """log of a non-positive integral estimate requested."""


class InvalidK(RenyikitError):
    """Neighbor order k incompatible with the requested exponent."""


class ZeroBandwidth(RenyikitError):
    """Bandwidth rule produced h = 0 (degenerate data)."""


class FormatVersionMismatch(RenyikitError):
    """Persisted table carries an unknown format version tag."""


class CorruptEntry(RenyikitError):
    """Persisted table row cannot be parsed."""


class MissingBiasEntry(RenyikitError):
    """No debiasing entry for the requested key."""

    def __init__(self, key):
        self.key = key
        super().__init__(f"no bias entry for key {key}")


class NonConvergence(RenyikitError):
    """Quadrature refinement stalled before reaching the target accuracy."""


class UnsupportedPair(RenyikitError):
    """No closed-form ground truth for this (family, alpha) combination."""
