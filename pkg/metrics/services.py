"""
Metrics Service Layer - reconstruction quality and distribution mismatch.

Quality:
    - rlne: relative l2 error against a ground truth
    - pearson_r2: squared correlation of peak intensities
    - effective_rank / nuclear_norm: singular-value summaries of H(x)
    - peak_rlne / peak_intensities: per-peak errors on spectra

Mismatch:
    - build_histogram: 101-bin mass functions of zero-filled data
    - wasserstein_01: optimal transport under 0/1 cost, equal to total variation
"""
import logging

import numpy as np
import scipy.linalg
import scipy.ndimage
import scipy.signal
import scipy.stats

from hankel.services import hankel
from .domain import HISTOGRAM_BINS, Histogram101, MetricError

logger = logging.getLogger(__name__)

EFFECTIVE_RANK_THRESHOLD = 1e-3

# Peak detection on noise-free magnitude spectra.
PEAK_HEIGHT_FACTOR = 1.0
PEAK_PROMINENCE_FRACTION = 0.01
PEAK_MIN_DISTANCE = 2


def rlne(truth, estimate) -> float:
    """||truth - estimate||_2 / ||truth||_2 over all entries."""
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise MetricError('rlne', f"shape mismatch {truth.shape} vs {estimate.shape}")
    norm = np.linalg.norm(truth.ravel())
    if norm == 0:
        raise MetricError('rlne', 'ground truth is zero')
    return float(np.linalg.norm((truth - estimate).ravel()) / norm)


def pearson_r2(c, d) -> float:
    """Square of the Pearson correlation between two real sequences."""
    c = np.asarray(c, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    if c.shape != d.shape or c.size < 2:
        raise MetricError('pearson_r2', f"need two sequences of equal length >= 2, got {c.size} and {d.size}")
    if np.ptp(c) == 0 or np.ptp(d) == 0:
        raise MetricError('pearson_r2', 'correlation is undefined for a constant sequence')
    return float(scipy.stats.pearsonr(c, d)[0] ** 2)


def singular_values(x, shape=None) -> np.ndarray:
    return scipy.linalg.svdvals(hankel(x, shape))


def rank_from_singular_values(values, threshold: float = EFFECTIVE_RANK_THRESHOLD) -> int:
    """Count of singular values whose share of the nuclear norm exceeds ``threshold``."""
    values = np.asarray(values, dtype=float)
    total = values.sum()
    if total <= 0:
        return 0
    return int(np.count_nonzero(values / total > threshold))


def effective_rank(x, shape=None, threshold: float = EFFECTIVE_RANK_THRESHOLD) -> int:
    if not np.any(np.asarray(x)):
        raise MetricError('effective_rank', 'signal is zero')
    return rank_from_singular_values(singular_values(x, shape), threshold)


def nuclear_norm(x, shape=None) -> float:
    return float(np.sum(singular_values(x, shape)))


def _magnitudes(signal, log_scaled: bool) -> np.ndarray:
    values = np.abs(np.asarray(signal)).ravel()
    values = values[values > 0]
    return np.log10(values) if log_scaled else values


def shared_range(*signal_sets, log_scaled: bool = False):
    """[min, max] of the nonzero (log-)magnitudes pooled over every signal of every set."""
    pooled = [_magnitudes(signal, log_scaled) for signals in signal_sets for signal in signals]
    pooled = [values for values in pooled if values.size]
    if not pooled:
        raise MetricError('shared_range', 'no nonzero magnitudes')
    values = np.concatenate(pooled)
    return float(values.min()), float(values.max())


def build_histogram(signals, log_scaled: bool = False, shared_range=None) -> Histogram101:
    """
    Mass function of zero-filled signals.

    Bin 0 holds the fraction of exact zeros; the remaining entries are binned
    into 100 uniform intervals over ``shared_range`` (defaults to the range of
    these signals). Values outside the range land in the edge bins.
    """
    signals = list(signals)
    if not signals:
        raise MetricError('build_histogram', 'empty signal set')

    entries = np.concatenate([np.asarray(signal).ravel() for signal in signals])
    zeros = int(np.count_nonzero(entries == 0))
    values = _magnitudes(entries, log_scaled)

    if shared_range is None:
        if values.size == 0:
            lo, hi = 0.0, 1.0
        else:
            lo, hi = float(values.min()), float(values.max())
    else:
        lo, hi = (float(v) for v in shared_range)
    if not hi > lo:
        raise MetricError('build_histogram', f"degenerate range [{lo}, {hi}]")

    counts, _ = np.histogram(np.clip(values, lo, hi), bins=HISTOGRAM_BINS - 1, range=(lo, hi))
    mass = np.concatenate([[zeros], counts]).astype(float) / entries.size
    return Histogram101(mass=mass, lo=lo, hi=hi, log_scaled=log_scaled)


def transport_01(p, q) -> float:
    """Minimum transport cost between mass vectors under 0/1 cost: 1/2 ||p - q||_1."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise MetricError('wasserstein_01', f"bin mismatch {p.shape} vs {q.shape}")
    return 0.5 * float(np.sum(np.abs(p - q)))


def wasserstein_01(p: Histogram101, q: Histogram101) -> float:
    if not p.compatible_with(q):
        raise MetricError('wasserstein_01', f"histograms differ in range or scaling: {p.range} vs {q.range}")
    return transport_01(p.mass, q.mass)


def detect_peaks(magnitude, height_factor: float = PEAK_HEIGHT_FACTOR,
                 prominence_fraction: float = PEAK_PROMINENCE_FRACTION,
                 distance: int = PEAK_MIN_DISTANCE) -> np.ndarray:
    """
    Local maxima above ``height_factor`` x median with prominence of at least
    ``prominence_fraction`` x max, at least ``distance`` bins apart.
    """
    magnitude = np.asarray(magnitude, dtype=float)
    peaks, _ = scipy.signal.find_peaks(
        magnitude,
        height=height_factor * np.median(magnitude),
        prominence=prominence_fraction * magnitude.max(),
        distance=distance,
    )
    return peaks


def peak_segments(magnitude, peaks) -> list:
    """Split [0, N) at the minimum between each pair of adjacent peaks."""
    magnitude = np.asarray(magnitude)
    bounds = [0]
    for left, right in zip(peaks[:-1], peaks[1:]):
        bounds.append(int(left + np.argmin(magnitude[left:right + 1])))
    bounds.append(magnitude.size)
    return [slice(start, stop) for start, stop in zip(bounds[:-1], bounds[1:])]


def _segments_of(truth_spectrum, **detect_options):
    truth_spectrum = np.asarray(truth_spectrum)
    magnitude = np.abs(truth_spectrum)
    peaks = detect_peaks(magnitude, **detect_options)
    if peaks.size == 0:
        raise MetricError('peak_rlne', 'no peaks detected in the reference spectrum')
    return peak_segments(magnitude, peaks)


def peak_rlne(truth_spectrum, estimate_spectrum, **detect_options) -> list:
    """RLNE of the complex spectrum restricted to each peak's segment."""
    truth_spectrum = np.asarray(truth_spectrum)
    estimate_spectrum = np.asarray(estimate_spectrum)
    if truth_spectrum.shape != estimate_spectrum.shape:
        raise MetricError('peak_rlne', f"shape mismatch {truth_spectrum.shape} vs {estimate_spectrum.shape}")
    return [rlne(truth_spectrum[segment], estimate_spectrum[segment])
            for segment in _segments_of(truth_spectrum, **detect_options)]


def peak_intensities(truth_spectrum, estimate_spectrum, height_factor: float = PEAK_HEIGHT_FACTOR,
                     prominence_fraction: float = PEAK_PROMINENCE_FRACTION):
    """
    Paired peak intensities (c, d) for correlation analysis.

    1D: magnitudes integrated over each peak segment.
    2D: 3x3 window sums of magnitudes around each local maximum of the truth.
    """
    truth = np.abs(np.asarray(truth_spectrum))
    estimate = np.abs(np.asarray(estimate_spectrum))
    if truth.shape != estimate.shape:
        raise MetricError('peak_intensities', f"shape mismatch {truth.shape} vs {estimate.shape}")

    if truth.ndim == 1:
        segments = _segments_of(truth, height_factor=height_factor, prominence_fraction=prominence_fraction)
        return (np.array([truth[s].sum() for s in segments]),
                np.array([estimate[s].sum() for s in segments]))

    if truth.ndim != 2:
        raise MetricError('peak_intensities', f"expected a 1D or 2D spectrum, got {truth.ndim}D")
    is_max = scipy.ndimage.maximum_filter(truth, size=3, mode='constant') == truth
    floor = max(height_factor * np.median(truth), prominence_fraction * truth.max())
    peaks = np.argwhere(is_max & (truth > floor))
    if peaks.size == 0:
        raise MetricError('peak_intensities', 'no peaks detected in the reference spectrum')

    window_truth = scipy.ndimage.uniform_filter(truth, size=3, mode='constant') * 9
    window_estimate = scipy.ndimage.uniform_filter(estimate, size=3, mode='constant') * 9
    rows, cols = peaks[:, 0], peaks[:, 1]
    return window_truth[rows, cols], window_estimate[rows, cols]
