"""Unitary FFT helpers (1/sqrt(N) both ways, so Parseval holds exactly)."""
import numpy as np


def fft_unitary(x, axis: int = -1) -> np.ndarray:
    return np.fft.fft(x, axis=axis, norm='ortho')


def ifft_unitary(x, axis: int = -1) -> np.ndarray:
    return np.fft.ifft(x, axis=axis, norm='ortho')


def fftc(x, axis: int = -1) -> np.ndarray:
    """Centred unitary FFT: DC sits at index n // 2 on both sides."""
    return np.fft.fftshift(
        np.fft.fft(np.fft.ifftshift(x, axes=axis), axis=axis, norm='ortho'), axes=axis
    )


def ifftc(x, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`fftc`."""
    return np.fft.fftshift(
        np.fft.ifft(np.fft.ifftshift(x, axes=axis), axis=axis, norm='ortho'), axes=axis
    )
