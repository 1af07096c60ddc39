"""Exception hierarchy shared by the physics kernels and the experiment harness."""


class DmimoError(Exception):
    """Base class for every error raised by dmimo_link."""


class DomainError(DmimoError, ValueError):
    """Non-physical input: negative radius, coincident Tx/Rx points, etc."""


class SizeError(DmimoError, ValueError):
    """Dimension or length mismatch between blocks, channels and matrices."""


class EstimabilityError(DmimoError):
    """Training is insufficient: singular Fisher matrix or singular S·Sᵀ."""


class EqualizerError(DmimoError):
    """Filter cannot be built (ill-conditioned, not PD) or the DFE would be non-causal."""


class ComplexityError(DmimoError):
    """Exhaustive search requested beyond the configured limit."""


class ConstraintError(DmimoError):
    """Training design constraints leave no feasible sequence."""


class UnsupportedModeError(DmimoError, ValueError):
    """Offset mode not defined for the requested number of transmitters."""


class ConfigError(DmimoError, ValueError):
    """Bad experiment configuration key or value."""


__all__ = [
    "DmimoError",
    "DomainError",
    "SizeError",
    "EstimabilityError",
    "EqualizerError",
    "ComplexityError",
    "ConstraintError",
    "UnsupportedModeError",
    "ConfigError",
]
