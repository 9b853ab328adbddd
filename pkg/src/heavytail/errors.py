"""Exception types shared across the package."""


class HeavyTailError(Exception):
    """Base class for all package-specific errors."""


class EvaluationError(HeavyTailError):
    """Numeric evaluation (quadrature or tabulation) missed its tolerance."""

    def __init__(self, message, *, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class SamplingError(HeavyTailError):
    """A sampler cannot produce draws for the requested parameters."""


class RegimeError(HeavyTailError):
    """Parameters fall outside the rare-event regime the method needs."""


class ConfigurationError(HeavyTailError):
    """Invalid estimator or experiment configuration."""


class PartialResultsError(HeavyTailError):
    """A replication failed mid-run; carries stats over the completed ones."""

    def __init__(self, message, *, completed, stats):
        super().__init__(message)
        self.completed = completed
        self.stats = stats
