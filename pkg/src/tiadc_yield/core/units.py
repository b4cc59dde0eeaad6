# src/tiadc_yield/core/units.py
import math
from typing import Union

import numpy as np

from tiadc_yield.core.errors import InvalidInputError

# Anything at or below this linear power is reported as "no spur" (-300 dB).
POWER_FLOOR = 1e-30

ArrayLike = Union[float, np.ndarray]


def lsb(resolution_bits: int) -> float:
    """LSB step on the [-1, 1] full-scale range: 2^(1-B)"""
    if resolution_bits < 1:
        raise InvalidInputError(f"resolution_bits must be >= 1, got {resolution_bits}")
    return math.ldexp(1.0, 1 - int(resolution_bits))


def db(p: float) -> float:
    """Linear power ratio to dB. Non-positive input is a domain error."""
    if not p > 0:
        raise InvalidInputError(f"db() needs a positive power ratio, got {p!r}")
    return 10.0 * math.log10(p)


def undb(x: ArrayLike) -> ArrayLike:
    """dB to linear power ratio"""
    out = np.power(10.0, np.asarray(x, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def to_db(p: ArrayLike) -> ArrayLike:
    """Presentation-side dB conversion; zero power maps to -inf"""
    arr = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def fold_frequency(f: ArrayLike, sample_rate: float) -> ArrayLike:
    """Alias any frequency into the first Nyquist zone [0, fs/2]"""
    half = sample_rate / 2.0
    folded = np.abs(np.mod(np.asarray(f, dtype=float) + half, sample_rate) - half)
    return float(folded) if folded.ndim == 0 else folded
