"""
Plug-in stages of the block pipeline.

A plug-in proposes additive corrections to the factors before the exact
optimizer stage runs. It sees the current point and a read-only history of
prior iterates, and must not modify either.

Built-ins:
    - zero: no correction
    - svt_shrink: move (P, Q) to the balanced factors of the soft-thresholded
      rank-R SVD of H(x)
"""
import logging
from dataclasses import dataclass
from typing import Protocol, Tuple

import numpy as np
import scipy.linalg

from core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class PluginShapeError(ConfigurationError):
    """Raised when a plug-in returns a correction of the wrong shape."""
    def __init__(self, plugin: str, expected, actual):
        self.plugin = plugin
        self.expected = expected
        self.actual = actual
        super().__init__(f"plugin {plugin} returned a correction of shape {actual}, expected {expected}")


@dataclass(frozen=True, eq=False)
class PluginInput:
    """Everything a plug-in may look at: H(x), the current factors and history."""
    hx: np.ndarray
    p: np.ndarray
    q: np.ndarray
    history_p: Tuple[np.ndarray, ...]
    history_q: Tuple[np.ndarray, ...]

    @property
    def hx_q(self) -> np.ndarray:
        return self.hx @ self.q

    @property
    def hx_h_p(self) -> np.ndarray:
        return self.hx.conj().T @ self.p


class PluginSolver(Protocol):
    name: str

    def correct_p(self, inputs: PluginInput) -> np.ndarray:
        ...

    def correct_q(self, inputs: PluginInput) -> np.ndarray:
        ...


class ZeroPlugin:
    name = 'zero'

    def correct_p(self, inputs: PluginInput) -> np.ndarray:
        return np.zeros_like(inputs.p)

    def correct_q(self, inputs: PluginInput) -> np.ndarray:
        return np.zeros_like(inputs.q)


class SvtShrinkPlugin:
    """Soft-threshold the singular values of H(x) by ``threshold`` and keep R of them."""
    name = 'svt_shrink'

    def __init__(self, threshold: float = 0.0):
        if threshold < 0:
            raise ConfigurationError(f"svt_shrink threshold must be non-negative, got {threshold}")
        self.threshold = threshold

    def _targets(self, inputs: PluginInput):
        rank = inputs.p.shape[1]
        u, s, vh = scipy.linalg.svd(inputs.hx, full_matrices=False)
        root = np.sqrt(np.maximum(s[:rank] - self.threshold, 0.0))
        p_target = np.zeros_like(inputs.p)
        q_target = np.zeros_like(inputs.q)
        kept = root.size
        p_target[:, :kept] = u[:, :kept] * root
        q_target[:, :kept] = vh[:kept].conj().T * root
        return p_target, q_target

    def correct_p(self, inputs: PluginInput) -> np.ndarray:
        return self._targets(inputs)[0] - inputs.p

    def correct_q(self, inputs: PluginInput) -> np.ndarray:
        return self._targets(inputs)[1] - inputs.q


def builtin_plugins() -> dict:
    return {ZeroPlugin.name: ZeroPlugin, SvtShrinkPlugin.name: SvtShrinkPlugin}


def get_plugin(name: str, threshold: float = 0.0) -> PluginSolver:
    """Instantiate a built-in plug-in by name."""
    if name == ZeroPlugin.name:
        return ZeroPlugin()
    if name == SvtShrinkPlugin.name:
        return SvtShrinkPlugin(threshold)
    raise ConfigurationError(f"unknown plugin {name!r}, expected one of {sorted(builtin_plugins())}")


def checked_correction(plugin: PluginSolver, correction, expected_shape) -> np.ndarray:
    correction = np.asarray(correction)
    if correction.shape != expected_shape:
        raise PluginShapeError(getattr(plugin, 'name', type(plugin).__name__), expected_shape, correction.shape)
    return correction
