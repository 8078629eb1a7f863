"""
Reconstruction data containers.

Types:
    - Spectrum2D: 2D NMR data, direct dimension (already transformed) x indirect time signal
    - KSpaceVolume: multi-coil k-space, frequency-encode x phase-encode x coils
"""
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigurationError, ReconError


class RowReconstructionError(ReconError):
    """A single row problem failed; the whole volume is abandoned."""
    def __init__(self, row: int, cause: Exception):
        self.row = row
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', ReconError.exit_code)
        super().__init__(f"row {row}: {cause}")


@dataclass(frozen=True, eq=False)
class Spectrum2D:
    """
    Rows run along the direct dimension; each row is the time signal of the
    indirect dimension, where undersampling happens.
    """
    data: np.ndarray
    direct_label: str = 'direct'
    indirect_label: str = 'indirect'
    direct_unit: str = 'bin'
    indirect_unit: str = 'sample'

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or min(data.shape) < 1:
            raise ConfigurationError(f"Spectrum2D needs a non-empty 2D matrix, got shape {data.shape}")
        object.__setattr__(self, 'data', data)

    @property
    def direct_dim(self) -> int:
        return self.data.shape[0]

    @property
    def indirect_dim(self) -> int:
        return self.data.shape[1]

    def with_data(self, data) -> 'Spectrum2D':
        return Spectrum2D(data=data, direct_label=self.direct_label, indirect_label=self.indirect_label,
                          direct_unit=self.direct_unit, indirect_unit=self.indirect_unit)


@dataclass(frozen=True, eq=False)
class KSpaceVolume:
    """A x Z x C k-space; a 2D matrix is read as a single coil."""
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or min(data.shape) < 1:
            raise ConfigurationError(f"KSpaceVolume needs an A x Z x C array with C >= 1, got shape {data.shape}")
        object.__setattr__(self, 'data', data)

    @property
    def frequency_encodes(self) -> int:
        return self.data.shape[0]

    @property
    def phase_encodes(self) -> int:
        return self.data.shape[1]

    @property
    def n_coils(self) -> int:
        return self.data.shape[2]
