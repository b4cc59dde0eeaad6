# src/tiadc_yield/optimizer/calibration.py
"""
Yield-to-step-size inversion.

A calibration with step D leaves residual mismatch roughly uniform on
[-D/2, D/2]; sizing treats it as Gaussian with sigma = D / sqrt(12), which is
the pessimistic choice. For a target spur level p0 and yield y we look for the
largest sigma whose strongest-spur CDF at p0 still reaches y.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from scipy import optimize, special

from tiadc_yield.core.errors import InvalidInputError, NonConvergenceError
from tiadc_yield.core.types import AdcConfig, MismatchKind, YieldQuery
from tiadc_yield.core.units import to_db, undb
from tiadc_yield.statistics.combined import (
    CIRC_SCALE,
    SpurInclusion,
    combined_cdf,
    combined_quantile,
)

logger = logging.getLogger(__name__)

SQRT12 = math.sqrt(12.0)

# real-bin CDF is erf(sqrt(N p / (scale * sigma^2)))
REAL_SCALE = {MismatchKind.OFFSET: 4.0, MismatchKind.GAIN: 2.0, MismatchKind.SKEW: 2.0}

# unit each kind's step is presented in
DISPLAY_UNITS = {
    MismatchKind.OFFSET: "LSB",
    MismatchKind.GAIN: "%",
    MismatchKind.SKEW: "fs",
}


def display_step(kind: MismatchKind, step: float, config: AdcConfig) -> float:
    """Step in the unit of DISPLAY_UNITS[kind]"""
    if kind is MismatchKind.OFFSET:
        return step / config.lsb
    if kind is MismatchKind.GAIN:
        return step * 100.0
    return step * 1e15


def raw_step(kind: MismatchKind, shown: float, config: AdcConfig) -> float:
    """Inverse of display_step"""
    if kind is MismatchKind.OFFSET:
        return shown * config.lsb
    if kind is MismatchKind.GAIN:
        return shown / 100.0
    return shown * 1e-15


@dataclass(frozen=True)
class StepSizeResult:
    """Largest admissible mismatch spread and the matching calibration step"""

    query: YieldQuery
    sigma: float
    step: float
    step_in_lsb: Optional[float]
    achieved_yield: float
    inclusion: SpurInclusion
    display: float
    unit: str
    variants: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "query": self.query.describe(),
            "sigma": self.sigma,
            "step": self.step,
            "step_in_lsb": self.step_in_lsb,
            "step_display": self.display,
            "unit": self.unit,
            "achieved_yield": self.achieved_yield,
            "inclusion": self.inclusion.describe(),
            "variants": dict(self.variants),
        }


def _kind_scale(kind: MismatchKind, f_sig: Optional[float]) -> float:
    """Skew spreads enter every CDF multiplied by 2*pi*f_sig"""
    if kind is MismatchKind.SKEW:
        return 2.0 * math.pi * f_sig
    return 1.0


def closed_form_sigma(
    kind: MismatchKind,
    p0: float,
    yield_target: float,
    n: int,
    inclusion: SpurInclusion,
    f_sig: Optional[float] = None,
) -> float:
    """
    Exact root when only one family of bins is included; otherwise the circ-only
    root, used as the bisection starting point.
    """
    if inclusion.n_circ:
        m = inclusion.n_circ
        log_term = -math.log(-math.expm1(math.log(yield_target) / m))
        var = n * p0 / (CIRC_SCALE[kind] * log_term)
    elif inclusion.n_real:
        r = inclusion.n_real
        x = float(special.erfinv(yield_target ** (1.0 / r)))
        var = n * p0 / (REAL_SCALE[kind] * x * x)
    else:
        raise InvalidInputError("no spurs selected; any mismatch meets the target")
    return math.sqrt(var) / _kind_scale(kind, f_sig)


def invert_yield(
    query: YieldQuery,
    config: AdcConfig,
    inclusion: Optional[SpurInclusion] = None,
    rtol: float = 1e-9,
    bracket_factor: float = 4.0,
    max_expansions: int = 60,
    verbose: bool = False,
) -> StepSizeResult:
    """Largest sigma with combined_cdf(target; sigma) >= yield, by bisection on log(sigma)"""
    n = config.interleave_factor
    kind = query.kind
    inclusion = inclusion or SpurInclusion.for_query(query, n)
    inclusion.check(kind, n)
    f_sig = query.signal_frequency
    p0 = undb(query.target_power)
    y = query.yield_target

    def excess(log_sigma: float) -> float:
        return combined_cdf(kind, p0, math.exp(log_sigma), n, inclusion, f_sig) - y

    # combined_cdf is strictly decreasing in sigma for p0 > 0
    center = math.log(closed_form_sigma(kind, p0, y, n, inclusion, f_sig))
    width = math.log(bracket_factor)
    lo, hi = center - width, center + width
    for _ in range(max_expansions):
        if excess(lo) > 0.0 > excess(hi):
            break
        width *= 2.0
        lo, hi = center - width, center + width
    else:
        raise NonConvergenceError(
            f"could not bracket the {kind.value} step for target {query.target_power} dB"
        )

    root = optimize.bisect(excess, lo, hi, xtol=rtol * 1e-3, maxiter=500)
    sigma = math.exp(root)
    # land on the side that still meets the yield
    for _ in range(1000):
        if excess(math.log(sigma)) >= 0.0:
            break
        sigma *= 1.0 - 1e-13

    step = sigma * SQRT12
    achieved = combined_cdf(kind, p0, sigma, n, inclusion, f_sig)
    logger.debug(
        "invert_yield %s target=%.2f dB yield=%.4f -> sigma=%.6g", kind.value,
        query.target_power, y, sigma,
    )

    variants: Dict[str, float] = {}
    if verbose and kind is not MismatchKind.OFFSET and n % 2 == 0:
        for label, nyq in (("nyquist_included", True), ("nyquist_excluded", False)):
            alt = SpurInclusion(False, nyq, inclusion.n_circ)
            alt_sigma = invert_yield(query, config, alt, rtol, bracket_factor, max_expansions).sigma
            variants[label] = display_step(kind, alt_sigma * SQRT12, config)

    return StepSizeResult(
        query=query,
        sigma=sigma,
        step=step,
        step_in_lsb=step / config.lsb if kind is MismatchKind.OFFSET else None,
        achieved_yield=achieved,
        inclusion=inclusion,
        display=display_step(kind, step, config),
        unit=DISPLAY_UNITS[kind],
        variants=variants,
    )


@dataclass
class StepCurve:
    """Step size versus target level"""

    kind: MismatchKind
    points: List[Tuple[float, StepSizeResult]]

    @property
    def unit(self) -> str:
        return DISPLAY_UNITS[self.kind]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "target_db": [t for t, _ in self.points],
                "step_size": [r.display for _, r in self.points],
                "unit": [self.unit] * len(self.points),
            },
            columns=["target_db", "step_size", "unit"],
        )


def sweep_step_vs_target(
    kind: MismatchKind,
    config: AdcConfig,
    target_range: Sequence[float],
    yield_target: float,
    inclusion: Optional[SpurInclusion] = None,
    f_sig: Optional[float] = None,
) -> StepCurve:
    """invert_yield over ascending targets; looser targets give coarser steps"""
    targets = [float(t) for t in target_range]
    if not targets:
        raise InvalidInputError("target range is empty")
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise InvalidInputError("targets must be strictly ascending")

    n = config.interleave_factor
    inclusion = inclusion or SpurInclusion.default(kind, n)
    points = []
    for target in targets:
        query = YieldQuery(
            kind=kind,
            target_power=target,
            yield_target=yield_target,
            include_dc=inclusion.include_dc,
            include_nyquist=inclusion.include_nyquist,
            signal_frequency=f_sig,
        )
        points.append((target, invert_yield(query, config, inclusion)))
    return StepCurve(kind, points)


def quantile_vs_step(
    kind: MismatchKind,
    config: AdcConfig,
    steps: Sequence[float],
    yield_target: float,
    inclusion: Optional[SpurInclusion] = None,
    f_sig: Optional[float] = None,
) -> pd.DataFrame:
    """Yield-quantile of the strongest spur (dB) for each calibration step (raw units)"""
    n = config.interleave_factor
    rows = []
    for step in steps:
        if not step > 0:
            raise InvalidInputError(f"calibration step must be > 0, got {step}")
        p = combined_quantile(kind, yield_target, step / SQRT12, n, inclusion, f_sig)
        rows.append(
            {
                "step": step,
                "step_display": display_step(kind, step, config),
                "unit": DISPLAY_UNITS[kind],
                "quantile_db": to_db(p),
            }
        )
    return pd.DataFrame(rows, columns=["step", "step_display", "unit", "quantile_db"])


# Production example
if __name__ == "__main__":
    cfg = AdcConfig(interleave_factor=16, sample_rate=25.6e9, resolution_bits=12)
    queries = [
        YieldQuery(MismatchKind.OFFSET, -80.0, 0.99, include_dc=False, include_nyquist=False),
        YieldQuery(MismatchKind.GAIN, -65.0, 0.99),
        YieldQuery(MismatchKind.SKEW, -65.0, 0.99, signal_frequency=12e9),
    ]
    print("=" * 60)
    print("CALIBRATION STEP SIZES (N=16, B=12, yield 99 %)")
    print("=" * 60)
    for q in queries:
        res = invert_yield(q, cfg)
        print(f"{q.kind.value:7}  {q.target_power:6.1f} dB  ->  {res.display:.4g} {res.unit}")
