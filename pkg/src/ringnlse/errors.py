"""Exception types shared across the package."""


class RingNLSEError(Exception):
    """Base class for all package errors."""


class InvalidModulus(RingNLSEError):
    """Modulus outside the allowed set: real in (0,1) or on the unit circle."""


class PoleProximity(RingNLSEError):
    """Evaluation point too close to a pole of a divergent Jacobi function."""


class DomainViolation(RingNLSEError):
    """(kind, g, E, m) combination outside the admissible coefficient domain."""


class PoleInDomain(RingNLSEError):
    """A pole of the scaled solution falls inside (or too close to) [0, L]."""


class RealnessViolation(RingNLSEError):
    """Circle-modulus evaluation produced a non-negligible imaginary part."""


class UnreachableSubset(RingNLSEError):
    """A zero-entry subset cannot represent this trace (vanishing denominator)."""

    def __init__(self, subset, reason):
        self.subset = subset
        self.reason = reason
        super().__init__(f"subset {subset} unreachable: {reason}")


class DerivativeVanishes(RingNLSEError):
    """phi'(L) ~ 0: the delta-to-delta-prime map is singular here."""


class NoRoot(RingNLSEError):
    """No eigenvalue root exists for the requested level and parameters."""


class BranchAbsent(RingNLSEError):
    """The requested periodic branch does not exist at this coupling."""


class NoConvergence(RingNLSEError):
    """Newton iteration failed; carries the best iterate found."""

    def __init__(self, message, best=None, residual=None):
        self.best = best
        self.residual = residual
        super().__init__(message)


class DomainExit(RingNLSEError):
    """Newton iterates left the admissible domain and projection failed."""


class NotFound(RingNLSEError):
    """Scan range does not contain the requested feature."""
