"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`GKPError` and
carries an ``exit_code`` used by the command-line front end:

* 2 -- the request itself is malformed (:class:`InvalidSpecError`)
* 3 -- the request is well formed but physically inadmissible (:class:`PhysicsError`)
* 4 -- a numerical safety guard tripped (:class:`NumericGuardError`)
"""


class GKPError(Exception):
    exit_code = 1


class InvalidSpecError(GKPError, ValueError):
    exit_code = 2


class RegimeError(InvalidSpecError):
    """Noise parameters outside the low-noise regime where the Gaussian-spike model holds."""


class PhysicsError(GKPError):
    exit_code = 3


class SiegelHalfSpaceError(PhysicsError):
    """A deblur would leave a negative spike covariance (outside the Siegel upper half-space)."""


class UnphysicalEnvelopeError(PhysicsError):
    pass


class ProbabilityFloorError(PhysicsError):
    """Measurement branch with vanishing probability."""


class NumericGuardError(GKPError, ArithmeticError):
    exit_code = 4


class HermiticityError(NumericGuardError):
    pass


class CoverageError(NumericGuardError):
    """The sampling window misses a non-negligible part of the function."""


class MemoryGuardError(NumericGuardError):
    pass
