# src/tiadc_yield/core/analytic.py
"""
Closed-form spur and replica prediction from the DFT of a concrete mismatch
sequence.

Offsets add a comb at k*fs/N weighted by o~_k. Gain mismatch convolves the same
comb with the input spectrum, so each tone is replicated at f_sig + k*fs/N with
relative amplitude g~_k. Skew does the same for the differentiated input
(first order), i.e. relative amplitude -2j*pi*f_sig*s~_k.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from tiadc_yield.core.dft import dft
from tiadc_yield.core.errors import InvalidInputError
from tiadc_yield.core.types import (
    AdcConfig,
    MismatchKind,
    MismatchSet,
    PowerReference,
    SpurPrediction,
    ToneSpec,
)
from tiadc_yield.core.units import POWER_FLOOR, fold_frequency, to_db

logger = logging.getLogger(__name__)

# 2*pi*f_max*max|s| above this and the first-order skew model is unreliable
FIRST_ORDER_LIMIT = 0.01

# normalized frequencies closer than this are treated as the same output bin
_FREQ_DECIMALS = 12


@dataclass(frozen=True)
class SpurReport:
    """Predicted spurs of one mismatch kind for one device"""

    kind: MismatchKind
    spurs: Tuple[SpurPrediction, ...]
    carrier_shift: float = 1.0
    warnings: Tuple[str, ...] = ()

    @property
    def worst(self) -> Optional[SpurPrediction]:
        if not self.spurs:
            return None
        return max(self.spurs, key=lambda s: s.power)

    @property
    def total_power(self) -> float:
        return float(sum(s.power for s in self.spurs))

    def __len__(self) -> int:
        return len(self.spurs)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "frequency_hz": [s.frequency for s in self.spurs],
                "power_db": [s.power_db for s in self.spurs],
                "reference": [s.reference.value for s in self.spurs],
                "kind": [s.kind.value for s in self.spurs],
                "bin": [s.bin_index for s in self.spurs],
                "tone": [s.tone_index for s in self.spurs],
            },
            columns=["frequency_hz", "power_db", "reference", "kind", "bin", "tone"],
        )


def _checked_sequence(values: Sequence[float], config: AdcConfig, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size != config.interleave_factor:
        raise InvalidInputError(
            f"mismatch length {arr.size} ≠ N={config.interleave_factor}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _checked_tones(tones: Sequence[ToneSpec], config: AdcConfig) -> List[ToneSpec]:
    tones = list(tones)
    for tone in tones:
        tone.check_against(config)
    return tones


def predict_offset_spurs(offsets: Sequence[float], config: AdcConfig) -> SpurReport:
    """
    Offset spurs at k*fs/N, k = 0..floor(N/2), in dBFS.

    Interior bins carry 4|o~_k|^2 (conjugate folding x full-scale-sine reference),
    DC and Nyquist carry 2|o~_k|^2.
    """
    o = _checked_sequence(offsets, config, "offsets")
    n = config.interleave_factor
    o_t = dft(o)

    spurs = []
    for k in range(n // 2 + 1):
        edge = k == 0 or 2 * k == n
        power = (2.0 if edge else 4.0) * float(abs(o_t[k]) ** 2)
        spurs.append(
            SpurPrediction(
                frequency=k * config.spur_spacing,
                power=power,
                reference=PowerReference.FULL_SCALE,
                kind=MismatchKind.OFFSET,
                bin_index=k,
            )
        )
    return SpurReport(MismatchKind.OFFSET, tuple(spurs))


def _replicas(
    coeffs: np.ndarray,
    tone: ToneSpec,
    tone_index: int,
    config: AdcConfig,
    kind: MismatchKind,
) -> List[SpurPrediction]:
    """
    Fold the components (f_sig + k*fs/N, coeffs[k]), k = 1..N-1, and their
    conjugate mirrors onto [0, fs/2]. Components landing on the same bin are
    summed as complex amplitudes before the power is taken.
    """
    n = len(coeffs)
    fs = config.sample_rate
    acc: Dict[float, complex] = {}
    origin: Dict[float, Tuple[int, float]] = {}

    for k in range(1, n):
        raw = tone.frequency + k * fs / n
        nu = (raw / fs) % 1.0
        for pos, amp in ((nu, coeffs[k]), ((-nu) % 1.0, np.conj(coeffs[k]))):
            key = round(pos, _FREQ_DECIMALS) % 1.0
            acc[key] = acc.get(key, 0j) + amp
            origin.setdefault(key, (k, fold_frequency(raw, fs)))

    spurs = []
    for key in sorted(acc):
        if key > 0.5:
            continue
        edge = key == 0.0 or key == 0.5
        # relative to the carrier's single-sided power
        power = float(abs(acc[key]) ** 2) / (2.0 if edge else 1.0)
        if power <= POWER_FLOOR:
            continue
        k, freq = origin[key]
        spurs.append(
            SpurPrediction(
                frequency=freq,
                power=power,
                reference=PowerReference.CARRIER,
                kind=kind,
                bin_index=k,
                carrier_power=tone.power,
                tone_index=tone_index,
            )
        )
    return spurs


def predict_gain_replicas(
    gains: Sequence[float], tones: Sequence[ToneSpec], config: AdcConfig
) -> SpurReport:
    """Gain-mismatch replicas per tone in dBc; the average gain g~_0 only scales the carrier"""
    g = _checked_sequence(gains, config, "gains")
    tones = _checked_tones(tones, config)
    g_t = dft(g)

    spurs: List[SpurPrediction] = []
    for i, tone in enumerate(tones):
        coeffs = g_t * np.exp(1j * tone.phase)
        spurs.extend(_replicas(coeffs, tone, i, config, MismatchKind.GAIN))

    carrier_shift = float(abs(1.0 + g_t[0]) ** 2)
    return SpurReport(MismatchKind.GAIN, tuple(spurs), carrier_shift=carrier_shift)


def predict_skew_replicas(
    skews: Sequence[float], tones: Sequence[ToneSpec], config: AdcConfig
) -> SpurReport:
    """First-order skew replicas per tone in dBc: (2*pi*f_sig)^2 |s~_k|^2"""
    s = _checked_sequence(skews, config, "skews")
    tones = _checked_tones(tones, config)
    s_t = dft(s)

    warnings = []
    if tones:
        f_max = max(t.frequency for t in tones)
        theta = 2.0 * np.pi * f_max * float(np.max(np.abs(s)))
        if theta > FIRST_ORDER_LIMIT:
            msg = (
                f"2*pi*f_max*max|s| = {theta:.3g} exceeds {FIRST_ORDER_LIMIT}; "
                "first-order skew prediction may be inaccurate"
            )
            logger.warning(msg)
            warnings.append(msg)

    spurs: List[SpurPrediction] = []
    for i, tone in enumerate(tones):
        coeffs = -2j * np.pi * tone.frequency * s_t * np.exp(1j * tone.phase)
        spurs.extend(_replicas(coeffs, tone, i, config, MismatchKind.SKEW))

    return SpurReport(MismatchKind.SKEW, tuple(spurs), warnings=tuple(warnings))


def predict_all(
    mismatch: MismatchSet, tones: Sequence[ToneSpec], config: AdcConfig
) -> Dict[MismatchKind, SpurReport]:
    """Per-kind reports for a full mismatch set (no cross terms)"""
    mismatch.check_against(config)
    return {
        MismatchKind.OFFSET: predict_offset_spurs(mismatch.offsets, config),
        MismatchKind.GAIN: predict_gain_replicas(mismatch.gains, tones, config),
        MismatchKind.SKEW: predict_skew_replicas(mismatch.skews, tones, config),
    }


# Example
if __name__ == "__main__":
    cfg = AdcConfig(interleave_factor=4, sample_rate=1e9)
    report = predict_offset_spurs([0.01, 0.0, 0.0, 0.0], cfg)
    print("=" * 60)
    print("OFFSET SPURS")
    print("=" * 60)
    for spur in report.spurs:
        print(f"  {spur.frequency / 1e6:8.1f} MHz  {to_db(spur.power):8.2f} dBFS")
    report = predict_gain_replicas(
        [0.01, 0.0, 0.0, 0.0], [ToneSpec(0.3 * cfg.sample_rate)], cfg
    )
    print("GAIN REPLICAS")
    for spur in report.spurs:
        print(f"  {spur.frequency / 1e6:8.1f} MHz  {to_db(spur.power):8.2f} dBc")
