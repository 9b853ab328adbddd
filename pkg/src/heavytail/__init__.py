"""State-independent importance sampling for heavy-tailed random walks.

Two rare-event targets are supported: the probability that a zero-mean
heavy-tailed walk of length n exceeds a high level b, and the probability
that a negative-drift walk ever crosses level b.  Both estimators split the
rare event into a single-big-jump piece and a bounded-increment piece and
sample each with its own simple change of measure.
"""

from .crossing import (
    BlockPmf,
    BlockScheme,
    CrossingProblem,
    FiniteVariance,
    StrongEfficiency,
    SubStrong,
    estimate_level_crossing,
)
from .errors import (
    ConfigurationError,
    EvaluationError,
    HeavyTailError,
    PartialResultsError,
    RegimeError,
    SamplingError,
)
from .harness import EstimatorSample, RngStream, RunStats, required_samples, run
from .ld import LdProblem, RegimeWarning, estimate_large_deviation
from .models import (
    DiscreteToy,
    ParetoShifted,
    ProductLambdaLaplace,
    PurePareto,
    QueueIncrement,
    TwistedTruncated,
)

__version__ = "0.1.0"

__all__ = [
    "BlockPmf",
    "BlockScheme",
    "ConfigurationError",
    "CrossingProblem",
    "DiscreteToy",
    "EstimatorSample",
    "EvaluationError",
    "FiniteVariance",
    "HeavyTailError",
    "LdProblem",
    "ParetoShifted",
    "PartialResultsError",
    "ProductLambdaLaplace",
    "PurePareto",
    "QueueIncrement",
    "RegimeError",
    "RegimeWarning",
    "RngStream",
    "RunStats",
    "SamplingError",
    "StrongEfficiency",
    "SubStrong",
    "TwistedTruncated",
    "estimate_large_deviation",
    "estimate_level_crossing",
    "required_samples",
    "run",
]
