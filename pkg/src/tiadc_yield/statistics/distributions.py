# src/tiadc_yield/statistics/distributions.py
"""
Distribution of DFT bins of i.i.d. zero-mean Gaussian mismatch sequences and
the closed-form CDFs of the resulting spur / replica powers.

For x ~ N(0, sigma^2 I), the normalized DFT has independent bins
x~_0 (and x~_{N/2} for even N) ~ N(0, sigma^2/N) and the remaining
bins up to N/2 ~ CN(0, sigma^2/N), the upper half being conjugate mirrors.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy import special

from tiadc_yield.core.errors import InvalidInputError

PowerLike = Union[float, np.ndarray]


class BinKind(Enum):
    REAL_GAUSSIAN = "real"
    CIRCULARLY_SYMMETRIC = "circ"


@dataclass(frozen=True)
class BinDistribution:
    """Distribution of one DFT bin; mirror_of is set for bins k > N/2"""

    kind: BinKind
    variance: float
    mirror_of: Optional[int] = None

    @property
    def is_mirror(self) -> bool:
        return self.mirror_of is not None


def bin_distribution(n: int, sigma: float, k: int) -> BinDistribution:
    if n < 1:
        raise InvalidInputError(f"N must be >= 1, got {n}")
    if not 0 <= k < n:
        raise InvalidInputError(f"bin index {k} out of range [0, {n})")
    _check_sigma(sigma)
    variance = sigma**2 / n
    real = k == 0 or 2 * k == n
    kind = BinKind.REAL_GAUSSIAN if real else BinKind.CIRCULARLY_SYMMETRIC
    mirror = n - k if 2 * k > n else None
    return BinDistribution(kind, variance, mirror)


def _check_sigma(sigma: float) -> None:
    if not (sigma > 0 and math.isfinite(sigma)):
        raise InvalidInputError(f"sigma must be > 0, got {sigma}")


def _scaled(p: PowerLike, sigma: float, n: int, scale: float) -> np.ndarray:
    """N*p / (scale*sigma^2), after validating p >= 0"""
    _check_sigma(sigma)
    if n < 1:
        raise InvalidInputError(f"N must be >= 1, got {n}")
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise InvalidInputError("spur power must be >= 0")
    return n * arr / (scale * sigma**2)


def _out(values: np.ndarray) -> PowerLike:
    return float(values) if np.ndim(values) == 0 else values


def _real_cdf(x: np.ndarray) -> PowerLike:
    return _out(special.erf(np.sqrt(x)))


def _circ_cdf(x: np.ndarray) -> PowerLike:
    return _out(-np.expm1(-x))


def cdf_offset_real(p: PowerLike, sigma: float, n: int) -> PowerLike:
    """DC / Nyquist offset spur, p in FS-sine units: erf(sqrt(N p / (4 sigma^2)))"""
    return _real_cdf(_scaled(p, sigma, n, 4.0))


def cdf_offset_circ(p: PowerLike, sigma: float, n: int) -> PowerLike:
    """Interior offset spur: 1 - exp(-N p / (4 sigma^2))"""
    return _circ_cdf(_scaled(p, sigma, n, 4.0))


def cdf_gain_real(p: PowerLike, sigma: float, n: int) -> PowerLike:
    """Nyquist gain replica, p in carrier units: erf(sqrt(N p / (2 sigma^2)))"""
    return _real_cdf(_scaled(p, sigma, n, 2.0))


def cdf_gain_circ(p: PowerLike, sigma: float, n: int) -> PowerLike:
    """Interior gain replica: 1 - exp(-N p / sigma^2)"""
    return _circ_cdf(_scaled(p, sigma, n, 1.0))


def skew_equivalent_sigma(sigma_s: float, f_sig: Optional[float]) -> float:
    """A skew spread at f_sig acts like a gain spread of 2*pi*f_sig*sigma_s"""
    if f_sig is None or not f_sig > 0:
        raise InvalidInputError(f"skew statistics need f_sig > 0, got {f_sig}")
    return 2.0 * math.pi * f_sig * sigma_s


def cdf_skew_real(p: PowerLike, sigma_s: float, n: int, f_sig: float) -> PowerLike:
    return cdf_gain_real(p, skew_equivalent_sigma(sigma_s, f_sig), n)


def cdf_skew_circ(p: PowerLike, sigma_s: float, n: int, f_sig: float) -> PowerLike:
    return cdf_gain_circ(p, skew_equivalent_sigma(sigma_s, f_sig), n)
