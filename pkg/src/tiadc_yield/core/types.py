# src/tiadc_yield/core/types.py
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from tiadc_yield.core.errors import InvalidInputError
from tiadc_yield.core.units import lsb, to_db


class MismatchKind(Enum):
    """Sub-ADC mismatch kinds"""

    OFFSET = "offset"
    GAIN = "gain"
    SKEW = "skew"

    @property
    def reference(self) -> "PowerReference":
        if self is MismatchKind.OFFSET:
            return PowerReference.FULL_SCALE
        return PowerReference.CARRIER


class PowerReference(Enum):
    """What a spur power is measured against"""

    FULL_SCALE = "dBFS"
    CARRIER = "dBc"


class DistributionKind(Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class AdcConfig:
    """Interleaved ADC: N sub-ADCs at fs/N each, full scale fixed to [-1, 1]"""

    interleave_factor: int
    sample_rate: float
    resolution_bits: int = 12

    def __post_init__(self):
        if int(self.interleave_factor) != self.interleave_factor or self.interleave_factor < 2:
            raise InvalidInputError(
                f"interleave_factor must be an integer >= 2, got {self.interleave_factor}"
            )
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise InvalidInputError(f"sample_rate must be > 0, got {self.sample_rate}")
        if int(self.resolution_bits) != self.resolution_bits or self.resolution_bits < 1:
            raise InvalidInputError(
                f"resolution_bits must be an integer >= 1, got {self.resolution_bits}"
            )

    @property
    def lsb(self) -> float:
        return lsb(self.resolution_bits)

    @property
    def spur_spacing(self) -> float:
        """Offset-spur grid spacing fs/N"""
        return self.sample_rate / self.interleave_factor

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0


def _as_sequence(name: str, values: Sequence[float]) -> Tuple[float, ...]:
    out = tuple(float(v) for v in np.asarray(values, dtype=float).ravel())
    if not all(math.isfinite(v) for v in out):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return out


@dataclass(frozen=True)
class MismatchSet:
    """
    Mismatches of one fabricated device.

    offsets are in full-scale units, gains are relative (0.01 = 1 %), skews in seconds.
    """

    offsets: Tuple[float, ...]
    gains: Tuple[float, ...]
    skews: Tuple[float, ...]

    def __post_init__(self):
        for name in ("offsets", "gains", "skews"):
            object.__setattr__(self, name, _as_sequence(name, getattr(self, name)))
        lengths = {len(self.offsets), len(self.gains), len(self.skews)}
        if len(lengths) != 1:
            raise InvalidInputError(
                "offsets, gains and skews must have equal length, got "
                f"{len(self.offsets)}/{len(self.gains)}/{len(self.skews)}"
            )
        if any(abs(g) >= 1.0 for g in self.gains):
            raise InvalidInputError("gain mismatch must satisfy |g_n| < 1")

    @classmethod
    def zeros(cls, n: int) -> "MismatchSet":
        return cls((0.0,) * n, (0.0,) * n, (0.0,) * n)

    @classmethod
    def of_kind(cls, kind: MismatchKind, values: Sequence[float]) -> "MismatchSet":
        """A set where only `kind` is non-zero"""
        values = _as_sequence(kind.value, values)
        base = cls.zeros(len(values))
        return replace(base, **{_FIELD_BY_KIND[kind]: values})

    def __len__(self) -> int:
        return len(self.offsets)

    def values(self, kind: MismatchKind) -> np.ndarray:
        return np.asarray(getattr(self, _FIELD_BY_KIND[kind]), dtype=float)

    def check_against(self, config: AdcConfig) -> None:
        if len(self) != config.interleave_factor:
            raise InvalidInputError(
                f"mismatch length {len(self)} ≠ N={config.interleave_factor}"
            )

    def scaled(self, alpha: float) -> "MismatchSet":
        return MismatchSet(
            tuple(alpha * v for v in self.offsets),
            tuple(alpha * v for v in self.gains),
            tuple(alpha * v for v in self.skews),
        )


_FIELD_BY_KIND = {
    MismatchKind.OFFSET: "offsets",
    MismatchKind.GAIN: "gains",
    MismatchKind.SKEW: "skews",
}


@dataclass(frozen=True)
class ToneSpec:
    """Single input tone A*cos(2*pi*f*t + phase)"""

    frequency: float
    amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.amplitude <= 1.0:
            raise InvalidInputError(
                f"tone amplitude must be in (0, 1], got {self.amplitude}"
            )

    @property
    def power(self) -> float:
        """Power relative to a full-scale sine"""
        return self.amplitude**2

    def check_against(self, config: AdcConfig) -> None:
        if not 0.0 < self.frequency < config.nyquist:
            raise InvalidInputError(
                f"tone at {self.frequency:g} Hz is outside the first Nyquist zone "
                f"(0, {config.nyquist:g})"
            )


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Single-sided power spectrum; a coherent full-scale sine reads exactly 1 (0 dBFS)"""

    bin_width: float
    frequencies: np.ndarray
    powers: np.ndarray
    convention: str = "single-sided"

    def __len__(self) -> int:
        return len(self.powers)

    @property
    def powers_db(self) -> np.ndarray:
        return to_db(self.powers)

    def bin_of(self, frequency: float, tol: float = 1e-6) -> Optional[int]:
        """Bin index for `frequency`, or None if it falls between bins"""
        pos = frequency / self.bin_width
        idx = int(round(pos))
        if abs(pos - idx) > tol or not 0 <= idx < len(self.powers):
            return None
        return idx

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"frequency_hz": self.frequencies, "power_dbfs": self.powers_db}
        )


@dataclass(frozen=True)
class SpurPrediction:
    """One predicted spur or replica; power is linear, relative to `reference`"""

    frequency: float
    power: float
    reference: PowerReference
    kind: MismatchKind
    bin_index: int
    carrier_power: float = 1.0
    tone_index: Optional[int] = None

    @property
    def power_db(self) -> float:
        """dBFS for offset spurs, dBc for replicas"""
        return to_db(self.power)


@dataclass(frozen=True)
class DistributionSpec:
    """Mismatch distribution: Gaussian(sigma) or Uniform on [-step/2, step/2]"""

    kind: DistributionKind
    width: float

    def __post_init__(self):
        if not (self.width > 0 and math.isfinite(self.width)):
            raise InvalidInputError(
                f"{self.kind.value} distribution needs a positive width, got {self.width}"
            )

    @classmethod
    def gaussian(cls, sigma: float) -> "DistributionSpec":
        return cls(DistributionKind.GAUSSIAN, sigma)

    @classmethod
    def uniform(cls, step: float) -> "DistributionSpec":
        return cls(DistributionKind.UNIFORM, step)

    @property
    def variance(self) -> float:
        if self.kind is DistributionKind.UNIFORM:
            return self.width**2 / 12.0
        return self.width**2

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "width": self.width, "sigma": self.sigma}


@dataclass(frozen=True)
class YieldQuery:
    """
    Yield question for one mismatch kind.

    target_power is dBFS for offsets and dBc for gain/skew. include_dc only matters
    for offsets; the gain/skew DC bin is a carrier scaling, never a spur.
    """

    kind: MismatchKind
    target_power: float
    yield_target: float
    include_dc: bool = True
    include_nyquist: bool = True
    signal_frequency: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.yield_target < 1.0:
            raise InvalidInputError(f"yield must be in (0, 1), got {self.yield_target}")
        if not math.isfinite(self.target_power):
            raise InvalidInputError("target power must be finite")
        if self.kind is MismatchKind.SKEW and not (
            self.signal_frequency is not None and self.signal_frequency > 0
        ):
            raise InvalidInputError("skew queries need signal_frequency > 0")

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "target_power_db": self.target_power,
            "reference": self.kind.reference.value,
            "yield": self.yield_target,
            "include_dc": self.include_dc,
            "include_nyquist": self.include_nyquist,
            "signal_frequency_hz": self.signal_frequency,
        }
