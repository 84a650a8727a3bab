"""Exception hierarchy.

Physics-domain errors derive from :class:`PhysicsDomainError` so the CLI can
map them to a single exit code; configuration problems derive from
:class:`ConfigError`.
"""


class ElasticEPError(Exception):
    """Base class for every error raised by this package."""


class PhysicsDomainError(ElasticEPError, ValueError):
    """Inputs fall outside the regime where a model is defined."""


class ConfigError(ElasticEPError, ValueError):
    """A scenario configuration file is malformed or out of range."""


# coupling
class NonPositiveEnergy(PhysicsDomainError):
    pass


class BelowVelocityFloor(PhysicsDomainError):
    pass


class SuperluminalVelocity(PhysicsDomainError):
    pass


class EmptyProfile(PhysicsDomainError):
    pass


class QuadratureUnderresolved(PhysicsDomainError):
    pass


# fock
class TruncationTooSmall(PhysicsDomainError):
    pass


class DimensionMismatch(ElasticEPError, ValueError):
    pass


class ZeroMeanField(PhysicsDomainError):
    pass


class GridTooCoarse(PhysicsDomainError):
    pass


# resonator
class DegenerateCavity(PhysicsDomainError):
    pass


class CavityTooLossy(PhysicsDomainError):
    pass


class WaveformTooStrong(PhysicsDomainError):
    pass


class DtNotCommensurate(PhysicsDomainError):
    pass


class WindowTooShort(PhysicsDomainError):
    pass
