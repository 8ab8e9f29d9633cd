"""Exception and warning types shared across the package."""


class VdpError(Exception):
    """Base class for all package errors."""


class DimensionError(VdpError, ValueError):
    """A cutoff or matrix dimension is invalid."""


class LayoutError(VdpError, ValueError):
    """Operator/state space layouts are missing a slot or do not match."""


class StateError(VdpError, ValueError):
    """A density matrix violates trace, Hermiticity or positivity bounds."""


class IntegratorError(VdpError, RuntimeError):
    """Time integration exceeded its accuracy or stability budget."""


class ConvergenceError(VdpError, RuntimeError):
    """An iterative fixed-point search did not converge."""


class ScheduleError(VdpError, ValueError):
    """A pulse schedule is malformed or missing required segments."""


class ReconstructionError(VdpError, RuntimeError):
    """A phase-space reconstruction failed a quality bound."""


class DistributionError(VdpError, ValueError):
    """A sampled distribution cannot be normalized or is invalid."""


class MeanFieldError(VdpError, ValueError):
    """Mean-field analysis precondition failed (non-fixed point, divergence)."""


class ConfigError(VdpError, ValueError):
    """An experiment configuration is invalid."""


class TruncationWarning(UserWarning):
    """A displacement amplitude is large relative to the Fock cutoff."""


class ReconstructionWarning(UserWarning):
    """A reconstruction check (normalization, negativity) is marginal."""
