"""
Sampling Service Layer - undersampling patterns and the U / U* operators.

Patterns:
    - poisson_gap: sinusoidally weighted Poisson gaps (NUS schedules, 1D signals)
    - cartesian_1d: fully sampled centre band plus random phase-encode lines (MRI)
    - uniform_random: uniformly random positions
    - full: every position

Poisson-gap follows the published Hyberts-Wagner procedure:
    1. Walk from index 0; after each pick advance by 1 plus a Poisson gap
    2. The gap intensity is weighted by sin(pi * t / (2N)): dense early, sparse late
    3. Index 0 is always sampled
    4. Rescale the intensity by 1.02 until exactly M points result
"""
import logging
import math

import numpy as np

from core.exceptions import ConfigurationError
from core.rng import make_rng
from .domain import PatternKind, SamplingPattern

logger = logging.getLogger(__name__)

POISSON_ADJUST_FACTOR = 1.02
POISSON_MAX_ADJUSTMENTS = 20000
DEFAULT_CENTER_FRACTION = 0.04


class SamplingError(ConfigurationError):
    """Raised when a pattern cannot be generated or applied."""
    def __init__(self, message: str, n_total=None, m=None):
        self.n_total = n_total
        self.m = m
        super().__init__(message)


def rate_to_count(n_total: int, rate: float) -> int:
    """Number of sampled points M for a sampling rate, at least one."""
    if not 0.0 < rate <= 1.0:
        raise SamplingError(f"sampling rate must lie in (0, 1], got {rate}", n_total=n_total)
    return max(1, min(n_total, int(round(rate * n_total))))


def full(n_total: int) -> SamplingPattern:
    return SamplingPattern(omega=tuple(range(n_total)), n_total=n_total, seed=0, kind=PatternKind.FULL)


def poisson_gap(n_total: int, m: int, seed: int) -> SamplingPattern:
    """
    Poisson-gap schedule with exactly ``m`` of ``n_total`` points.

    Args:
        n_total: Grid length N
        m: Number of points to sample, 1 <= m <= N
        seed: Generator seed; the schedule is a pure function of (N, M, seed)

    Raises:
        SamplingError: If m is out of range or the adjustment loop fails to land on m
    """
    if not 1 <= m <= n_total:
        raise SamplingError(f"poisson_gap needs 1 <= M <= N, got M={m}, N={n_total}", n_total, m)
    if m == n_total:
        return SamplingPattern(omega=tuple(range(n_total)), n_total=n_total, seed=seed,
                               kind=PatternKind.POISSON_GAP)

    rng = make_rng(seed)
    intensity = 2.0 * (n_total / m - 1.0)

    for attempt in range(1, POISSON_MAX_ADJUSTMENTS + 1):
        picks = []
        position = 0
        while position < n_total:
            picks.append(position)
            position += 1
            weight = math.sin(math.pi * position / (2.0 * n_total))
            position += int(rng.poisson(intensity * weight))

        if len(picks) == m:
            logger.debug(f"poisson_gap N={n_total} M={m} seed={seed}: {attempt} attempts")
            return SamplingPattern(omega=tuple(picks), n_total=n_total, seed=seed,
                                   kind=PatternKind.POISSON_GAP)

        if len(picks) > m:
            intensity *= POISSON_ADJUST_FACTOR
        else:
            intensity /= POISSON_ADJUST_FACTOR

    raise SamplingError(
        f"poisson_gap did not reach M={m} of N={n_total} after {POISSON_MAX_ADJUSTMENTS} adjustments",
        n_total, m,
    )


def cartesian_1d(z: int, rate: float, center_fraction: float = DEFAULT_CENTER_FRACTION,
                 seed: int = 0) -> SamplingPattern:
    """
    1D Cartesian phase-encode pattern for centred k-space.

    A contiguous band of ceil(center_fraction * Z) lines around the DC line Z // 2
    is always acquired; the remaining floor(rate * Z) - band lines are drawn
    uniformly without replacement.
    """
    if not 0.0 < rate <= 1.0:
        raise SamplingError(f"sampling rate must lie in (0, 1], got {rate}", z)
    if not 0.0 <= center_fraction <= rate:
        raise SamplingError(
            f"center_fraction must lie in [0, rate={rate}], got {center_fraction}", z
        )

    total = int(math.floor(rate * z + 1e-9))
    band = int(math.ceil(center_fraction * z - 1e-9))
    if total < 1 or band > total:
        raise SamplingError(
            f"infeasible pattern: {total} lines requested with a centre band of {band}", z, total
        )

    start = (z - band) // 2
    center = np.arange(start, start + band)
    rest = np.setdiff1d(np.arange(z), center)

    rng = make_rng(seed)
    chosen = rng.choice(rest, size=total - band, replace=False) if total > band else np.array([], dtype=int)
    omega = np.union1d(center, chosen)
    return SamplingPattern(omega=tuple(omega.tolist()), n_total=z, seed=seed, kind=PatternKind.CARTESIAN_1D)


def uniform_random(n_total: int, m: int, seed: int) -> SamplingPattern:
    """``m`` positions drawn uniformly without replacement."""
    if not 1 <= m <= n_total:
        raise SamplingError(f"uniform_random needs 1 <= M <= N, got M={m}, N={n_total}", n_total, m)
    rng = make_rng(seed)
    omega = np.sort(rng.choice(n_total, size=m, replace=False))
    return SamplingPattern(omega=tuple(omega.tolist()), n_total=n_total, seed=seed,
                           kind=PatternKind.UNIFORM_RANDOM)


def make_pattern(kind: str, n_total: int, rate: float, seed: int,
                 center_fraction: float = DEFAULT_CENTER_FRACTION) -> SamplingPattern:
    """Build a pattern of ``kind`` at a sampling ``rate``."""
    if kind == PatternKind.FULL:
        return full(n_total)
    if kind == PatternKind.CARTESIAN_1D:
        return cartesian_1d(n_total, rate, center_fraction=center_fraction, seed=seed)

    m = rate_to_count(n_total, rate)
    if kind == PatternKind.POISSON_GAP:
        return poisson_gap(n_total, m, seed)
    if kind == PatternKind.UNIFORM_RANDOM:
        return uniform_random(n_total, m, seed)
    raise SamplingError(f"unknown pattern kind {kind!r}", n_total)


def _check_rows(data: np.ndarray, expected: int, what: str) -> None:
    if data.ndim == 0 or data.shape[0] != expected:
        raise SamplingError(f"{what} has {data.shape[0] if data.ndim else 0} rows, expected {expected}")


def apply_U(x, pattern: SamplingPattern) -> np.ndarray:
    """Keep the sampled rows: y[k] = x[omega[k]] (axis 0, so coil columns ride along)."""
    x = np.asarray(x)
    _check_rows(x, pattern.n_total, 'signal')
    return x[pattern.indices].copy()


def apply_U_star(y, pattern: SamplingPattern) -> np.ndarray:
    """Zero-fill: place the M samples at their omega positions within N."""
    y = np.asarray(y)
    _check_rows(y, pattern.m, 'samples')
    out = np.zeros((pattern.n_total,) + y.shape[1:], dtype=np.result_type(y.dtype, np.complex128))
    out[pattern.indices] = y
    return out


def sampling_mask(pattern: SamplingPattern) -> np.ndarray:
    return pattern.mask
