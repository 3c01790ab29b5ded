class BDCatError(Exception):
    """Base class for numerical failures in this package."""


class SingularSystemError(BDCatError):
    pass


class TruncationError(BDCatError):
    """State-space truncation did not converge within ``max_level``."""


class SingularHError(BDCatError, ZeroDivisionError):
    """The determinant ``H(s)`` vanished (to underflow) at the requested frequency."""


class CatastropheRequiredError(BDCatError, ValueError):
    """The quantity only exists when ``alpha + beta > 0``."""


class InversionError(BDCatError):
    """Laplace inversion failed its convergence diagnostic."""


class LimitError(BDCatError):
    """A limit at ``s = 0`` or a derivative cross-check did not settle."""
