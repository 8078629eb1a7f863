"""
Signal Service Layer - synthetic exponential signals and additive noise.

Operations:
    - synthesize: evaluate a superposition of damped complex sinusoids
    - table_signal: the two fixed five-peak test signals
    - sample_training_model / generate_training_set: random training signals
    - add_noise: per-component i.i.d. gaussian or uniform complex noise
    - to_spectrum / from_spectrum: unitary FFT between time signal and spectrum
"""
import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from core.exceptions import ConfigurationError
from core.fft import fft_unitary, ifft_unitary
from core.rng import derive_seeds, make_rng
from sampling.domain import SamplingPattern
from sampling.services import apply_U, apply_U_star, poisson_gap, rate_to_count
from .domain import ExponentialModel, NoiseKind, NoiseSpec, PeakParams, TrainingRanges

logger = logging.getLogger(__name__)

# Shared by both tabulated signals; only the amplitudes differ.
TABLE_DAMPINGS = (50.0, 75.0, 100.0, 125.0, 150.0)
TABLE_PHASES = tuple(k * math.pi for k in (0.4, 0.8, 1.2, 1.6, 2.0))
TABLE_FREQUENCIES = (0.165, 0.333, 0.498, 0.667, 0.831)
TABLE_AMPLITUDES = {
    'S1': (0.300, 0.475, 0.650, 0.825, 1.000),
    'S2': (0.100, 0.325, 0.550, 0.775, 1.000),
}
TABLE_LENGTH = 255

DEFAULT_TRAINING_NOISE_MAX = 0.04


def synthesize(model: ExponentialModel) -> np.ndarray:
    """
    Evaluate x[n] = sum_g A_g e^{i phi_g} e^{-n dt / tau_g} e^{i 2 pi f_g n dt}.

    Returns:
        complex128 vector of length ``model.length``; zeros for an empty peak list
    """
    t = np.arange(model.length) * model.sample_interval
    x = np.zeros(model.length, dtype=np.complex128)
    for peak in model.peaks:
        x += (peak.amplitude * np.exp(1j * peak.phase)
              * np.exp(-t / peak.damping + 2j * np.pi * peak.frequency * t))
    return x


def table_signal(which: str) -> ExponentialModel:
    """Return the tabulated five-peak test signal 'S1' or 'S2'."""
    try:
        amplitudes = TABLE_AMPLITUDES[str(which).upper()]
    except KeyError:
        raise ConfigurationError(f"unknown table signal {which!r}, expected one of {sorted(TABLE_AMPLITUDES)}")

    peaks = tuple(
        PeakParams(amplitude=a, damping=tau, frequency=f, phase=phi)
        for a, tau, f, phi in zip(amplitudes, TABLE_DAMPINGS, TABLE_FREQUENCIES, TABLE_PHASES)
    )
    return ExponentialModel(peaks=peaks, sample_interval=1.0, length=TABLE_LENGTH)


def sample_training_model(ranges: TrainingRanges, rng: np.random.Generator) -> ExponentialModel:
    """
    Draw one model uniformly within ``ranges``.

    The peak count is a uniform integer in the inclusive range; every other
    parameter is a continuous uniform draw.
    """
    if ranges is None:
        ranges = TrainingRanges()

    low, high = ranges.peak_count
    count = int(rng.integers(low, high + 1))
    peaks = []
    for _ in range(count):
        peaks.append(PeakParams(
            amplitude=float(rng.uniform(*ranges.amplitude)),
            damping=float(rng.uniform(*ranges.damping)),
            frequency=float(rng.uniform(*ranges.frequency)),
            phase=float(rng.uniform(*ranges.phase)),
        ))
    return ExponentialModel(peaks=tuple(peaks), sample_interval=ranges.sample_interval, length=ranges.length)


def add_noise(x, spec: NoiseSpec) -> np.ndarray:
    """
    Return ``x + n`` with real and imaginary parts of n drawn independently.

    gaussian: each component N(0, scale^2); uniform: each component U[-scale, scale].
    """
    x = np.asarray(x, dtype=np.complex128)
    if spec.scale == 0:
        return x.copy()

    rng = make_rng(spec.seed)
    if spec.kind == NoiseKind.GAUSSIAN:
        noise = rng.normal(0.0, spec.scale, size=x.shape) + 1j * rng.normal(0.0, spec.scale, size=x.shape)
    else:
        noise = rng.uniform(-spec.scale, spec.scale, size=x.shape) + 1j * rng.uniform(-spec.scale, spec.scale, size=x.shape)
    return x + noise


def training_noise_scale(rng: np.random.Generator, max_scale: float = DEFAULT_TRAINING_NOISE_MAX,
                         min_scale: float = 0.0) -> float:
    """One noise level per training signal, uniform on [min_scale, max_scale]."""
    if not 0 <= min_scale <= max_scale:
        raise ConfigurationError(f"noise range must satisfy 0 <= min <= max, got [{min_scale}, {max_scale}]")
    return float(rng.uniform(min_scale, max_scale))


@dataclass(frozen=True, eq=False)
class TrainingSample:
    clean: np.ndarray
    zero_filled: np.ndarray
    pattern: SamplingPattern
    noise_scale: float


def generate_training_set(count: int, rate: float, ranges: TrainingRanges = None,
                          seed: int = 0) -> List[TrainingSample]:
    """
    Build ``count`` training pairs, each with its own Poisson-gap pattern and noise level.

    Args:
        count: Number of samples
        rate: Sampling rate of every pattern
        ranges: Parameter ranges (defaults to the training-set table)
        seed: Base seed; sample ``i`` uses seeds derived from (seed, i)

    Returns:
        List of TrainingSample (clean signal, zero-filled noisy measurement, pattern, sigma)
    """
    if count < 1:
        raise ConfigurationError(f"count must be at least 1, got {count}")
    ranges = ranges or TrainingRanges()
    m = rate_to_count(ranges.length, rate)

    samples = []
    for i in range(count):
        model_seed, pattern_seed, noise_seed = derive_seeds(seed, i, count=3)
        rng = make_rng(model_seed)
        model = sample_training_model(ranges, rng)
        sigma = training_noise_scale(rng, max_scale=ranges.noise_scale[1], min_scale=ranges.noise_scale[0])

        clean = synthesize(model)
        pattern = poisson_gap(ranges.length, m, pattern_seed)
        noisy = add_noise(clean, NoiseSpec(kind=NoiseKind.GAUSSIAN, scale=sigma, seed=noise_seed))
        samples.append(TrainingSample(
            clean=clean,
            zero_filled=apply_U_star(apply_U(noisy, pattern), pattern),
            pattern=pattern,
            noise_scale=sigma,
        ))

    logger.info(f"Generated {count} training samples at rate {rate} (seed {seed})")
    return samples


def to_spectrum(x) -> np.ndarray:
    return fft_unitary(np.asarray(x, dtype=np.complex128))


def from_spectrum(s) -> np.ndarray:
    return ifft_unitary(np.asarray(s, dtype=np.complex128))
