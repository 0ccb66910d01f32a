"""Exception types raised by mmtop."""


class MmtopError(Exception):
    """Base class for all mmtop-specific errors."""


class SectorConstructionError(MmtopError):
    """Anchor points yield a singular or inconsistent sector decomposition."""


class MeshFormatError(MmtopError):
    """Mesh file is malformed or describes an invalid triangulation."""


class DegenerateFieldError(MmtopError):
    """A level-set field with zero L2 norm cannot be normalized."""


class StationaryFieldError(MmtopError):
    """The derivative field vanishes identically; the angle is undefined."""


class AntipodalFieldError(MmtopError):
    """Level set and derivative field are antipodal; the update direction
    is undefined at 180 degrees."""


class DegenerateMaterialPairError(MmtopError):
    """Polarization coefficients have a vanishing denominator for this
    material pair."""


class RigidBodyModeError(MmtopError):
    """The constrained elasticity system is singular (insufficient supports)."""
