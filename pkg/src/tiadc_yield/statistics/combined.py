# src/tiadc_yield/statistics/combined.py
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import optimize

from tiadc_yield.core.errors import InvalidInputError, NonConvergenceError
from tiadc_yield.core.types import MismatchKind, YieldQuery
from tiadc_yield.statistics.distributions import (
    PowerLike,
    cdf_gain_circ,
    cdf_gain_real,
    cdf_offset_circ,
    cdf_offset_real,
    skew_equivalent_sigma,
)

logger = logging.getLogger(__name__)

# scale in the circ exponent N*p/(scale*sigma^2); also the mean bin power is scale*sigma^2/N
CIRC_SCALE = {MismatchKind.OFFSET: 4.0, MismatchKind.GAIN: 1.0, MismatchKind.SKEW: 1.0}


def max_circ_bins(n: int) -> int:
    """Independent circularly-symmetric bins of a length-N real sequence"""
    return n // 2 - 1 if n % 2 == 0 else (n - 1) // 2


@dataclass(frozen=True)
class SpurInclusion:
    """Which spurs enter a strongest-spur CDF"""

    include_dc: bool
    include_nyquist: bool
    n_circ: int

    @classmethod
    def default(
        cls,
        kind: MismatchKind,
        n: int,
        include_dc: bool = True,
        include_nyquist: bool = True,
    ) -> "SpurInclusion":
        # the gain/skew DC bin scales the carrier and never counts as a replica
        return cls(
            include_dc=include_dc and kind is MismatchKind.OFFSET,
            include_nyquist=include_nyquist and n % 2 == 0,
            n_circ=max_circ_bins(n),
        )

    @classmethod
    def for_query(cls, query: YieldQuery, n: int) -> "SpurInclusion":
        return cls.default(query.kind, n, query.include_dc, query.include_nyquist)

    @property
    def n_real(self) -> int:
        return int(self.include_dc) + int(self.include_nyquist)

    @property
    def n_terms(self) -> int:
        return self.n_real + self.n_circ

    def check(self, kind: MismatchKind, n: int) -> None:
        if self.include_dc and kind is not MismatchKind.OFFSET:
            raise InvalidInputError(f"the DC bin is not a {kind.value} spur")
        if self.include_nyquist and n % 2:
            raise InvalidInputError(f"odd N={n} has no Nyquist bin")
        if not 0 <= self.n_circ <= max_circ_bins(n):
            raise InvalidInputError(
                f"n_circ={self.n_circ} outside [0, {max_circ_bins(n)}] for N={n}"
            )

    def describe(self) -> dict:
        return {
            "include_dc": self.include_dc,
            "include_nyquist": self.include_nyquist,
            "n_circ": self.n_circ,
        }


def effective_sigma(kind: MismatchKind, sigma: float, f_sig: Optional[float]) -> float:
    if kind is MismatchKind.SKEW:
        return skew_equivalent_sigma(sigma, f_sig)
    return sigma


def bin_cdfs(
    kind: MismatchKind, sigma: float, n: int, f_sig: Optional[float] = None
) -> Tuple[Callable[[PowerLike], PowerLike], Callable[[PowerLike], PowerLike]]:
    """(real-bin CDF, circ-bin CDF) of one kind as functions of power"""
    if kind is MismatchKind.OFFSET:
        return (
            lambda p: cdf_offset_real(p, sigma, n),
            lambda p: cdf_offset_circ(p, sigma, n),
        )
    eff = effective_sigma(kind, sigma, f_sig)
    return lambda p: cdf_gain_real(p, eff, n), lambda p: cdf_gain_circ(p, eff, n)


def combined_cdf(
    kind: MismatchKind,
    p: PowerLike,
    sigma: float,
    n: int,
    inclusion: Optional[SpurInclusion] = None,
    f_sig: Optional[float] = None,
) -> PowerLike:
    """P(strongest included spur <= p): product of the independent per-bin CDFs"""
    inclusion = inclusion or SpurInclusion.default(kind, n)
    inclusion.check(kind, n)
    real_cdf, circ_cdf = bin_cdfs(kind, sigma, n, f_sig)

    p_arr = np.asarray(p, dtype=float)
    out = np.ones_like(p_arr)
    if inclusion.n_real:
        out = out * np.power(real_cdf(p_arr), inclusion.n_real)
    if inclusion.n_circ:
        out = out * np.power(circ_cdf(p_arr), inclusion.n_circ)
    return float(out) if out.ndim == 0 else out


def mean_bin_power(
    kind: MismatchKind, sigma: float, n: int, f_sig: Optional[float] = None
) -> float:
    """Expected power of one interior (circ) spur"""
    return CIRC_SCALE[kind] * effective_sigma(kind, sigma, f_sig) ** 2 / n


def combined_quantile(
    kind: MismatchKind,
    yield_target: float,
    sigma: float,
    n: int,
    inclusion: Optional[SpurInclusion] = None,
    f_sig: Optional[float] = None,
) -> float:
    """Power p with combined_cdf(p) = yield, i.e. the yield-quantile of the strongest spur"""
    if not 0.0 < yield_target < 1.0:
        raise InvalidInputError(f"yield must be in (0, 1), got {yield_target}")
    inclusion = inclusion or SpurInclusion.default(kind, n)
    inclusion.check(kind, n)
    if inclusion.n_terms == 0:
        raise InvalidInputError("no spurs selected; the strongest-spur CDF is trivially 1")

    ref = mean_bin_power(kind, sigma, n, f_sig)

    def gap(log_p: float) -> float:
        return combined_cdf(kind, math.exp(log_p), sigma, n, inclusion, f_sig) - yield_target

    lo, hi = math.log(ref) - 10.0, math.log(ref) + 10.0
    for _ in range(20):
        if gap(lo) < 0.0 < gap(hi):
            break
        lo, hi = lo - 10.0, hi + 10.0
    else:
        raise NonConvergenceError("could not bracket the strongest-spur quantile")
    log_p = optimize.brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    return math.exp(log_p)
