"""
Signal model entities.

Types:
    - PeakParams: one damped complex sinusoid (amplitude, damping, frequency, phase)
    - ExponentialModel: superposition of peaks on a sampling grid
    - NoiseSpec: additive noise description
    - TrainingRanges: parameter ranges for randomly drawn training signals
"""
import math
from dataclasses import dataclass
from typing import Tuple

from django.db import models

from core.exceptions import ConfigurationError

TWO_PI = 2.0 * math.pi


class NoiseKind(models.TextChoices):
    GAUSSIAN = 'gaussian', 'Gaussian'
    UNIFORM = 'uniform', 'Uniform'


@dataclass(frozen=True)
class PeakParams:
    """
    One exponential component A·e^{iφ}·e^{-nΔt/τ}·e^{i2πfnΔt}.

    Damping is expressed in samples; frequency in normalized cycles per sample.
    The phase interval is closed at 2π because tabulated peaks list φ = 2.0π.
    """
    amplitude: float
    damping: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ConfigurationError(f"amplitude must be positive, got {self.amplitude}")
        if not self.damping > 0:
            raise ConfigurationError(f"damping must be positive, got {self.damping}")
        if not 0.0 <= self.frequency < 1.0:
            raise ConfigurationError(f"frequency must lie in [0, 1), got {self.frequency}")
        if not 0.0 <= self.phase <= TWO_PI:
            raise ConfigurationError(f"phase must lie in [0, 2π], got {self.phase}")


@dataclass(frozen=True)
class ExponentialModel:
    """Superposition of ``peaks`` sampled at ``length`` points spaced ``sample_interval`` apart."""
    peaks: Tuple[PeakParams, ...] = ()
    sample_interval: float = 1.0
    length: int = 255

    def __post_init__(self):
        object.__setattr__(self, 'peaks', tuple(self.peaks))
        if not self.sample_interval > 0:
            raise ConfigurationError(f"sample_interval must be positive, got {self.sample_interval}")
        if int(self.length) != self.length or self.length < 1:
            raise ConfigurationError(f"length must be a positive integer, got {self.length}")

    @property
    def peak_count(self) -> int:
        return len(self.peaks)

    def with_peaks(self, peaks) -> 'ExponentialModel':
        return ExponentialModel(peaks=tuple(peaks), sample_interval=self.sample_interval, length=self.length)


@dataclass(frozen=True)
class NoiseSpec:
    """
    Additive complex noise. ``scale`` is the per-component standard deviation for
    gaussian noise and the per-component maximum amplitude for uniform noise.
    """
    kind: str = NoiseKind.GAUSSIAN
    scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NoiseKind.values:
            raise ConfigurationError(f"unknown noise kind {self.kind!r}")
        if not self.scale >= 0:
            raise ConfigurationError(f"noise scale must be non-negative, got {self.scale}")

    @property
    def convention(self) -> str:
        return 'per-component i.i.d. (real and imaginary parts independent)'


def _check_range(name: str, bounds: Tuple[float, float]) -> None:
    low, high = bounds
    if low > high:
        raise ConfigurationError(f"invalid range for {name}: min {low} > max {high}")


@dataclass(frozen=True)
class TrainingRanges:
    """Uniform draw ranges for training signals; defaults follow the training-set table."""
    peak_count: Tuple[int, int] = (1, 10)
    frequency: Tuple[float, float] = (0.0, 1.0)
    phase: Tuple[float, float] = (0.0, TWO_PI)
    amplitude: Tuple[float, float] = (0.05, 1.00)
    damping: Tuple[float, float] = (10.00, 179.20)
    noise_scale: Tuple[float, float] = (0.0, 0.04)
    length: int = 255
    sample_interval: float = 1.0

    def __post_init__(self):
        for name in ('peak_count', 'frequency', 'phase', 'amplitude', 'damping', 'noise_scale'):
            _check_range(name, getattr(self, name))
        if self.peak_count[0] < 0:
            raise ConfigurationError(f"peak_count minimum must be non-negative, got {self.peak_count[0]}")
        if self.amplitude[0] <= 0 or self.damping[0] <= 0:
            raise ConfigurationError('amplitude and damping ranges must be positive')
