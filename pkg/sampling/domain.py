"""
Sampling pattern entity: the ordered index set Ω of acquired positions.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from django.db import models

from core.exceptions import ConfigurationError


class PatternKind(models.TextChoices):
    POISSON_GAP = 'poisson_gap', 'Poisson-gap'
    CARTESIAN_1D = 'cartesian_1d', '1D Cartesian'
    UNIFORM_RANDOM = 'uniform_random', 'Uniform random'
    FULL = 'full', 'Fully sampled'


@dataclass(frozen=True)
class SamplingPattern:
    """
    Strictly increasing sampled positions ``omega`` within ``n_total`` points,
    with the seed and generator kind that produced them.
    """
    omega: Tuple[int, ...]
    n_total: int
    seed: int = 0
    kind: str = PatternKind.FULL

    def __post_init__(self):
        omega = tuple(int(i) for i in self.omega)
        object.__setattr__(self, 'omega', omega)
        if self.n_total < 1:
            raise ConfigurationError(f"n_total must be positive, got {self.n_total}")
        if self.kind not in PatternKind.values:
            raise ConfigurationError(f"unknown pattern kind {self.kind!r}")
        if not omega:
            raise ConfigurationError('pattern must sample at least one position')
        if omega[0] < 0 or omega[-1] >= self.n_total:
            raise ConfigurationError(f"pattern indices must lie in [0, {self.n_total})")
        if any(b <= a for a, b in zip(omega, omega[1:])):
            raise ConfigurationError('pattern indices must be strictly increasing')

    @property
    def m(self) -> int:
        return len(self.omega)

    @property
    def rate(self) -> float:
        return self.m / self.n_total

    @property
    def is_full(self) -> bool:
        return self.m == self.n_total

    @cached_property
    def indices(self) -> np.ndarray:
        indices = np.asarray(self.omega, dtype=np.intp)
        indices.setflags(write=False)
        return indices

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean diagonal of the U*U projector."""
        mask = np.zeros(self.n_total, dtype=bool)
        mask[self.indices] = True
        mask.setflags(write=False)
        return mask
