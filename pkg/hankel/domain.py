"""
Hankel shapes and multi-coil data blocks.
"""
import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigurationError


class HankelShapeError(ConfigurationError):
    """Raised when data does not fit the Hankel shape it is used with."""
    def __init__(self, message: str, expected=None, actual=None):
        self.expected = expected
        self.actual = actual
        super().__init__(message)


@dataclass(frozen=True)
class HankelShape:
    """N1 x N2 Hankel matrix built from a vector of length N1 + N2 - 1."""
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise HankelShapeError(f"Hankel dimensions must be positive, got {self.n1}x{self.n2}")

    @property
    def length(self) -> int:
        return self.n1 + self.n2 - 1

    @property
    def max_rank(self) -> int:
        return min(self.n1, self.n2)

    @classmethod
    def for_length(cls, length: int) -> 'HankelShape':
        """Square or near-square shape: N1 = ceil((L + 1) / 2), N2 = L + 1 - N1."""
        if length < 1:
            raise HankelShapeError(f"signal length must be positive, got {length}")
        n1 = math.ceil((length + 1) / 2)
        return cls(n1=n1, n2=length + 1 - n1)


@dataclass(frozen=True, eq=False)
class CoilBlock:
    """Multi-coil signal: one column per coil, ``shape.length`` rows."""
    data: np.ndarray
    shape: HankelShape

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] < 1:
            raise HankelShapeError(f"coil block must be a 2D matrix with at least one coil, got {data.shape}")
        if data.shape[0] != self.shape.length:
            raise HankelShapeError(
                f"coil block has {data.shape[0]} rows, shape {self.shape.n1}x{self.shape.n2} needs {self.shape.length}",
                expected=self.shape.length, actual=data.shape[0],
            )
        object.__setattr__(self, 'data', data)

    @property
    def n_coils(self) -> int:
        return self.data.shape[1]
