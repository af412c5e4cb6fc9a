"""Exception types shared across the package."""


class HystrlError(Exception):
    """Base class for all package-specific errors."""


class ConfigInvalid(HystrlError):
    """An experiment configuration failed validation."""


class NonMonotoneGamma(HystrlError):
    """A ridge function table is not nondecreasing."""


class NonMonotoneTime(HystrlError):
    """A time sequence moved backwards where forward motion is required."""


class TimeOutOfRange(HystrlError):
    """An evaluation time lies outside the stored input's span."""


class LevelTooDeep(HystrlError):
    """A requested refinement level exceeds the supported maximum."""


class LevelMismatch(HystrlError):
    """Mesh levels of two objects that must agree do not."""


class NaNDetected(HystrlError):
    """A nonfinite value appeared in an integration step."""


class StartupUnderflow(HystrlError):
    """Too few steps are available to bootstrap a multistep scheme."""


class NotHurwitz(HystrlError):
    """A system matrix expected to be Hurwitz has an unstable eigenvalue."""


class SingularSystem(HystrlError):
    """A linear solve required by the algorithm is singular."""


class RunDiverged(HystrlError):
    """A simulation left the admissible region and was aborted."""
