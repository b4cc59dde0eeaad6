# src/tiadc_yield/core/dft.py
"""
Normalized DFT used for mismatch sequences:

    u~_k = (1/N) * sum_n exp(-2j*pi*k*n/N) * u_n

The 1/N sits on the forward transform so that |u~_k|^2 are average powers
independent of N. Every power formula downstream depends on that placement.
"""
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from tiadc_yield.core.errors import InvalidInputError

ComplexSequence = NDArray[np.complex128]


def _as_1d(x: Union[Sequence[complex], np.ndarray], name: str) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} must not be empty")
    return arr


def dft(x: Union[Sequence[complex], np.ndarray]) -> ComplexSequence:
    """Forward DFT with 1/N normalization"""
    arr = _as_1d(x, "dft input")
    return np.fft.fft(arr) / arr.size


def idft(u: Union[Sequence[complex], np.ndarray]) -> ComplexSequence:
    """Inverse of dft(): sum with exp(+2j*pi*k*n/N), no 1/N"""
    arr = _as_1d(u, "idft input")
    return np.fft.ifft(arr) * arr.size


def dft_rows(x: np.ndarray) -> ComplexSequence:
    """dft() applied to each row of a (trials, N) array"""
    arr = np.asarray(x)
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise InvalidInputError(f"expected a (trials, N) array, got shape {arr.shape}")
    return np.fft.fft(arr, axis=1) / arr.shape[1]
