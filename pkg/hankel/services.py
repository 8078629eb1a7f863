"""
Hankel Service Layer - forward and adjoint Hankel transforms.

Operations:
    - hankel: vector of length N1 + N2 - 1 -> N1 x N2 Hankel matrix
    - hankel_adjoint_avg: anti-diagonal averages (left inverse of hankel)
    - hankel_adjoint_sum: anti-diagonal sums (the true Frobenius adjoint)
    - flip_conj: reversal plus conjugation about the centre
    - hankel_vc / hankel_vc_adjoint: virtual-coil augmentation for multi-coil data
    - hankel_vc_adjoint_sum: Frobenius adjoint of hankel_vc

The averaging adjoint pairs coil j with its virtual coil N3 + j so that
hankel_vc_adjoint(hankel_vc(X)) returns X.
"""
import logging
from functools import lru_cache

import numpy as np
import scipy.linalg

from .domain import CoilBlock, HankelShape, HankelShapeError

logger = logging.getLogger(__name__)


def _resolve_shape(length: int, shape: HankelShape = None) -> HankelShape:
    shape = shape or HankelShape.for_length(length)
    if shape.length != length:
        raise HankelShapeError(
            f"vector of length {length} does not fit a {shape.n1}x{shape.n2} Hankel matrix",
            expected=shape.length, actual=length,
        )
    return shape


@lru_cache(maxsize=64)
def _anti_diagonal_index(n1: int, n2: int) -> np.ndarray:
    index = np.add.outer(np.arange(n1), np.arange(n2)).ravel()
    index.setflags(write=False)
    return index


def anti_diagonal_counts(shape: HankelShape) -> np.ndarray:
    """Number of entries on each anti-diagonal k = 0..L-1."""
    k = np.arange(shape.length)
    return np.minimum.reduce([k + 1, np.full_like(k, shape.n1), np.full_like(k, shape.n2), shape.length - k])


def hankel(x, shape: HankelShape = None) -> np.ndarray:
    """X[i, j] = x[i + j]."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise HankelShapeError(f"hankel expects a vector, got an array of shape {x.shape}")
    shape = _resolve_shape(x.size, shape)
    return scipy.linalg.hankel(x[:shape.n1], x[shape.n1 - 1:])


def hankel_adjoint_sum(X, shape: HankelShape = None) -> np.ndarray:
    """x[k] = sum of X over the anti-diagonal i + j = k."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2:
        raise HankelShapeError(f"expected a matrix, got an array of shape {X.shape}")
    shape = shape or HankelShape(*X.shape)
    if X.shape != (shape.n1, shape.n2):
        raise HankelShapeError(f"matrix is {X.shape[0]}x{X.shape[1]}, expected {shape.n1}x{shape.n2}",
                               expected=(shape.n1, shape.n2), actual=X.shape)

    index = _anti_diagonal_index(shape.n1, shape.n2)
    real = np.bincount(index, weights=X.real.ravel(), minlength=shape.length)
    imag = np.bincount(index, weights=X.imag.ravel(), minlength=shape.length)
    return real + 1j * imag


def hankel_adjoint_avg(X, shape: HankelShape = None) -> np.ndarray:
    """x[k] = mean of X over the anti-diagonal i + j = k."""
    shape = shape or HankelShape(*np.shape(X))
    return hankel_adjoint_sum(X, shape) / anti_diagonal_counts(shape)


def flip_conj(x) -> np.ndarray:
    """y[k] = conj(x[L - 1 - k]); applied per column for matrices."""
    return np.conj(np.asarray(x)[::-1])


def hankel_vc(block: CoilBlock) -> np.ndarray:
    """[H(x_1) ... H(x_C) H(flip_conj(x_1)) ... H(flip_conj(x_C))], N1 x 2*N2*C."""
    columns = [block.data[:, c] for c in range(block.n_coils)]
    parts = [hankel(col, block.shape) for col in columns]
    parts += [hankel(flip_conj(col), block.shape) for col in columns]
    return np.hstack(parts)


def _coil_blocks(Y, shape: HankelShape, n_coils: int) -> list:
    Y = np.asarray(Y, dtype=np.complex128)
    expected = (shape.n1, 2 * shape.n2 * n_coils)
    if n_coils < 1 or Y.shape != expected:
        raise HankelShapeError(
            f"virtual-coil matrix is {'x'.join(map(str, Y.shape))}, expected {expected[0]}x{expected[1]}",
            expected=expected, actual=Y.shape,
        )

    return np.split(Y, 2 * n_coils, axis=1)


def hankel_vc_adjoint_sum(Y, shape: HankelShape, n_coils: int) -> np.ndarray:
    """
    Frobenius adjoint of :func:`hankel_vc` as an L x C matrix.

    Column j is H*(Y_j) + flip_conj(H*(Y_{C+j})) with anti-diagonal sums.

    Raises:
        HankelShapeError: If Y is not N1 x 2*N2*C
    """
    blocks = _coil_blocks(Y, shape, n_coils)
    data = np.empty((shape.length, n_coils), dtype=np.complex128)
    for j in range(n_coils):
        data[:, j] = hankel_adjoint_sum(blocks[j], shape) + flip_conj(hankel_adjoint_sum(blocks[n_coils + j], shape))
    return data


def hankel_vc_adjoint(Y, shape: HankelShape, n_coils: int) -> CoilBlock:
    """
    Averaging adjoint of :func:`hankel_vc`.

    Column j of the result is (H*(Y_j) + flip_conj(H*(Y_{C+j}))) / 2 with
    anti-diagonal means.

    Raises:
        HankelShapeError: If Y is not N1 x 2*N2*C
    """
    counts = 2 * anti_diagonal_counts(shape)
    return CoilBlock(data=hankel_vc_adjoint_sum(Y, shape, n_coils) / counts[:, None], shape=shape)


class HankelOperator:
    """Forward/adjoint pair acting on a single signal vector."""

    def __init__(self, shape: HankelShape):
        self.shape = shape

    @classmethod
    def for_signal(cls, x) -> 'HankelOperator':
        return cls(HankelShape.for_length(np.shape(x)[0]))

    @property
    def max_rank(self) -> int:
        return self.shape.max_rank

    def forward(self, x) -> np.ndarray:
        return hankel(x, self.shape)

    def adjoint(self, X) -> np.ndarray:
        return hankel_adjoint_avg(X, self.shape)

    def adjoint_sum(self, X) -> np.ndarray:
        return hankel_adjoint_sum(X, self.shape)

    def gram_diagonal(self) -> np.ndarray:
        """Diagonal of H*H with the summing adjoint: the anti-diagonal counts."""
        return anti_diagonal_counts(self.shape).astype(float)


class VirtualCoilOperator(HankelOperator):
    """Forward/adjoint pair acting on an L x C coil matrix through virtual coils."""

    def __init__(self, shape: HankelShape, n_coils: int):
        super().__init__(shape)
        if n_coils < 1:
            raise HankelShapeError(f"need at least one coil, got {n_coils}")
        self.n_coils = n_coils

    @classmethod
    def for_signal(cls, x) -> 'VirtualCoilOperator':
        rows, coils = np.shape(x)
        return cls(HankelShape.for_length(rows), coils)

    @property
    def max_rank(self) -> int:
        return min(self.shape.n1, 2 * self.shape.n2 * self.n_coils)

    def forward(self, x) -> np.ndarray:
        return hankel_vc(CoilBlock(data=x, shape=self.shape))

    def adjoint(self, X) -> np.ndarray:
        return hankel_vc_adjoint(X, self.shape, self.n_coils).data

    def adjoint_sum(self, X) -> np.ndarray:
        return hankel_vc_adjoint_sum(X, self.shape, self.n_coils)

    def gram_diagonal(self) -> np.ndarray:
        counts = 2.0 * anti_diagonal_counts(self.shape)
        return np.repeat(counts[:, None], self.n_coils, axis=1)
