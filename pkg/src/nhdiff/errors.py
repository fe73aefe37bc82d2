"""Exception hierarchy shared by all nhdiff modules."""


class NhdiffError(Exception):
    """Base class for all package errors."""


class ConfigError(NhdiffError, ValueError):
    """Malformed or invalid experiment configuration."""


class NumericalError(NhdiffError, RuntimeError):
    """A numerical routine failed or produced unusable output."""


class NearDefectiveError(NumericalError):
    """Eigenvector matrix too ill-conditioned for biorthogonal overlaps."""


class IntegrationBlowupError(NumericalError):
    """NaN/Inf appeared during SDE integration."""

    def __init__(self, step_index, time):
        self.step_index = step_index
        self.time = time
        super().__init__(
            f"non-finite particle position at step {step_index} (t={time:.6g})"
        )


class QuadratureSetupError(NumericalError):
    """Failed to locate/bracket the radial integrand maximum."""


class StepSizeError(NumericalError):
    """Finite-difference step too small for the floating-point precision."""


class InvalidStencilError(NumericalError):
    """Finite-difference stencil crosses the spectral support boundary."""
