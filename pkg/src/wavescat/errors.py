"""Exceptions shared across the wavescat modules."""


class WavescatError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(WavescatError):
    """Scene geometry is self-inconsistent or cannot be meshed."""


class InvalidRadiusError(WavescatError, ValueError):
    """Truncation radius must be strictly positive."""


class MeshParameterError(WavescatError, ValueError):
    """Target edge length violates the mesher preconditions."""


class ThresholdProximityError(WavescatError):
    """Spectral parameter too close to a transverse cut-off value."""

    def __init__(self, mu: float, nu: float, end_index: int, k: int, guard: float):
        self.mu = mu
        self.nu = nu
        self.end_index = end_index
        self.k = k
        self.guard = guard
        super().__init__(
            f"mu={mu!r} is within guard {guard!r} of the cut-off "
            f"nu_{k}={nu!r} of end {end_index}"
        )


class InvalidImpedanceError(WavescatError, ValueError):
    """zeta must be a nonzero real number."""


class SingularSystemError(WavescatError):
    """Sparse factorization of the truncated system failed.

    The truncated impedance problem is uniquely solvable for every real
    zeta != 0, so this indicates a discretization or programming fault and
    must abort the run loudly.
    """


class SingularGramError(WavescatError):
    """Trace Gram matrix is numerically singular.

    The Gram matrix is nonsingular once the truncation radius exceeds a
    scene-dependent onset; a singular Gram matrix usually means R is below
    that onset.  Increase R.
    """


class ConvergenceError(WavescatError):
    """Too few usable data points for a decay-rate fit."""


class NumericsError(WavescatError):
    """A quantity violated a bound that holds in exact arithmetic."""


class ConfigError(WavescatError):
    """Run configuration file is malformed or inconsistent."""
