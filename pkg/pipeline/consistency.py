"""
Data consistency: the gamma-weighted blend of an estimate with the measured samples.

Because H*H is the identity, minimizing ||x - x_tilde||^2 + gamma ||y - U x||^2
decouples per sample: sampled entries become (gamma * y_n + x_tilde_n) / (1 + gamma),
unsampled entries keep x_tilde_n.
"""
import numpy as np

from core.exceptions import ConfigurationError
from sampling.domain import SamplingPattern


def _row_mask(pattern: SamplingPattern, ndim: int) -> np.ndarray:
    mask = pattern.mask
    return mask.reshape(mask.shape + (1,) * (ndim - 1))


def data_consistency(zero_filled_y, x_tilde, gamma: float, pattern: SamplingPattern) -> np.ndarray:
    """
    Blend ``x_tilde`` toward the zero-filled measurements on the sampled rows.

    Args:
        zero_filled_y: U*y, same shape as x_tilde (coil matrices are blended row-wise)
        x_tilde: Current estimate
        gamma: Reliability of the measurements relative to the estimate, > 0
        pattern: Sampling pattern along axis 0

    Raises:
        ConfigurationError: If shapes disagree or gamma is not positive
    """
    zero_filled_y = np.asarray(zero_filled_y, dtype=np.complex128)
    x_tilde = np.asarray(x_tilde, dtype=np.complex128)
    if zero_filled_y.shape != x_tilde.shape or x_tilde.shape[0] != pattern.n_total:
        raise ConfigurationError(
            f"data consistency needs matching shapes with {pattern.n_total} rows, "
            f"got {zero_filled_y.shape} and {x_tilde.shape}"
        )
    if not gamma > 0:
        raise ConfigurationError(f"gamma must be positive, got {gamma}")

    blended = (gamma * zero_filled_y + x_tilde) / (1.0 + gamma)
    return np.where(_row_mask(pattern, x_tilde.ndim), blended, x_tilde)


def data_consistency_normal_equations(zero_filled_y, x_tilde, gamma: float, pattern: SamplingPattern) -> np.ndarray:
    """
    Solve (I + gamma U*U) x = x_tilde + gamma U*y as an explicit linear system.

    Reference form of :func:`data_consistency` for vectors; O(N^3).
    """
    x_tilde = np.asarray(x_tilde, dtype=np.complex128)
    system = np.eye(pattern.n_total) + gamma * np.diag(pattern.mask.astype(float))
    return np.linalg.solve(system, x_tilde + gamma * np.asarray(zero_filled_y, dtype=np.complex128))
