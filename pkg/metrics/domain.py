"""
Metric value objects.
"""
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigurationError

HISTOGRAM_BINS = 101


class MetricError(ConfigurationError):
    """Raised when a metric is undefined for its inputs."""
    def __init__(self, metric: str, reason: str):
        self.metric = metric
        self.reason = reason
        super().__init__(f"{metric}: {reason}")


@dataclass(frozen=True, eq=False)
class Histogram101:
    """
    Probability mass over 101 bins: bin 0 counts exact zeros, bins 1..100
    split [lo, hi] of the (log10-)magnitudes uniformly.
    """
    mass: np.ndarray
    lo: float
    hi: float
    log_scaled: bool = False

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (HISTOGRAM_BINS,):
            raise MetricError('histogram', f"expected {HISTOGRAM_BINS} bins, got {mass.shape}")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > 1e-12:
            raise MetricError('histogram', 'mass must be non-negative and sum to 1')
        if not self.hi > self.lo:
            raise MetricError('histogram', f"degenerate range [{self.lo}, {self.hi}]")
        mass.setflags(write=False)
        object.__setattr__(self, 'mass', mass)

    @property
    def range(self):
        return (self.lo, self.hi)

    def compatible_with(self, other: 'Histogram101') -> bool:
        return (self.log_scaled == other.log_scaled
                and np.isclose(self.lo, other.lo, rtol=1e-12, atol=0)
                and np.isclose(self.hi, other.hi, rtol=1e-12, atol=0))
