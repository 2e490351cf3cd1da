"""Exception types shared across the package."""


class SpinmechError(Exception):
    """Base class for all package errors."""


class SpecMismatchError(SpinmechError):
    """Operands live on different Hilbert spaces."""


class TruncationError(SpinmechError):
    """Requested state does not fit in the Fock truncation."""


class InfeasibleSiteError(SpinmechError):
    """No qubit placement satisfies the cooling inequalities."""


class PostselectionError(SpinmechError):
    """Measurement branch has (numerically) zero probability."""


class SteadyStateError(SpinmechError):
    """Steady-state solve failed or the kernel is degenerate."""


class StiffnessError(SpinmechError):
    """Adaptive integrator step size underflowed."""


class ConfigError(SpinmechError):
    """Malformed or incomplete run configuration."""
