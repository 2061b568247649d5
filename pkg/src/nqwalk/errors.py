"""Exception and warning types shared across the package."""


class WalkError(Exception):
    """Base class for all nqwalk errors."""


class NonPositiveSymbolError(WalkError):
    """The Gram symbol came out negative beyond round-off, i.e. the overlap
    model does not define a positive semidefinite Gram operator (or the
    truncation band is too small)."""


class BasisMismatchError(WalkError):
    """A state tagged with one basis was passed to an operation that
    requires the other."""


class BoundaryOverflowError(WalkError):
    """Probability mass reached the edge of the periodic lattice, so the
    finite grid no longer faithfully represents the infinite line."""


class NoPeaksError(WalkError):
    """Peak detection found no peak above the mass threshold."""


class SigmaZeroError(WalkError):
    """The requested quantity needs a phase-space step, which is undefined
    in the orthogonal limit (sigma = 0)."""


class DegenerateEverywhereError(WalkError):
    """The two eigenvalue branches coincide on the whole momentum grid;
    there is no meaningful band structure to return."""


class DerivativeMismatchError(WalkError):
    """The analytic group velocity disagrees with the finite-difference
    check beyond tolerance away from band degeneracies."""


class ConfigError(WalkError):
    """Invalid or inconsistent experiment configuration."""


class IllConditionedWarning(UserWarning):
    """A negative Gram power was requested where the symbol falls below the
    regularization floor; the result is floored rather than amplified."""
