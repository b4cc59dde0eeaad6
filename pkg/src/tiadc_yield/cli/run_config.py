# src/tiadc_yield/cli/run_config.py
"""Validated parameters of one CLI invocation"""
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from tiadc_yield.core.errors import InvalidInputError
from tiadc_yield.core.types import (
    AdcConfig,
    DistributionSpec,
    MismatchKind,
    MismatchSet,
    ToneSpec,
)
from tiadc_yield.evaluation.montecarlo import ALGORITHM, check_algorithm, sample_mismatch

Command = Literal["predict", "simulate", "cdf", "ccdf-compare", "yield", "sweep"]
KindChoice = Literal["offset", "gain", "skew", "all"]

MISMATCH_COMMANDS = ("predict", "simulate")
STATISTICS_COMMANDS = ("cdf", "yield", "sweep")


def parse_float_list(text: Union[str, List[float]]) -> List[float]:
    """'0.01,0,0,0' -> [0.01, 0.0, 0.0, 0.0]"""
    if isinstance(text, list):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError as exc:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from exc


def parse_tone(text: str) -> ToneSpec:
    """'3e9', '3e9:0.5' or '3e9:0.5:1.57' (frequency Hz : amplitude : phase rad)"""
    parts = str(text).split(":")
    if not 1 <= len(parts) <= 3:
        raise InvalidInputError(f"tone must be f[:amplitude[:phase]], got {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise InvalidInputError(f"tone must be numeric, got {text!r}") from exc
    return ToneSpec(*values)


def read_mismatch_file(path: Union[str, Path], kind: Optional[MismatchKind]) -> MismatchSet:
    """
    One sub-ADC per line. A line holds either a single value of `kind` or three
    values 'offset gain skew' (whitespace or comma separated). Blank lines and
    '#' comments are skipped.
    """
    rows: List[Tuple[float, ...]] = []
    try:
        with open(path, "r") as f:
            lines = f.readlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read mismatch file {path}: {exc}") from exc

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        try:
            values = tuple(float(v) for v in fields)
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: not a number: {raw.strip()!r}")
        if not all(math.isfinite(v) for v in values):
            raise InvalidInputError(f"{path}:{lineno}: non-finite value")
        if len(values) == 1 and kind is None:
            raise InvalidInputError(
                f"{path}:{lineno}: single-column files need --kind offset|gain|skew"
            )
        if len(values) not in (1, 3):
            raise InvalidInputError(
                f"{path}:{lineno}: expected 1 or 3 values, got {len(values)}"
            )
        if rows and len(values) != len(rows[0]):
            raise InvalidInputError(f"{path}:{lineno}: column count changed")
        rows.append(values)

    if not rows:
        raise InvalidInputError(f"{path}: no mismatch values")
    if len(rows[0]) == 1:
        return MismatchSet.of_kind(kind, [r[0] for r in rows])
    offsets, gains, skews = zip(*rows)
    return MismatchSet(offsets, gains, skews)


class RunConfig(BaseModel):
    """Every flag of the CLI; a --config JSON file holds the same keys"""

    model_config = ConfigDict(extra="forbid")

    command: Command
    kind: KindChoice = "all"

    # AdcConfig
    n: int = Field(16, ge=2)
    fs: float = Field(25.6e9, gt=0)
    bits: int = Field(12, ge=1)

    # mismatch source (predict / simulate)
    offsets: Optional[List[float]] = None
    gains: Optional[List[float]] = None
    skews: Optional[List[float]] = None
    mismatch_file: Optional[str] = None
    dist: Optional[Literal["gaussian", "uniform"]] = None
    width: Optional[float] = Field(None, gt=0)
    seed: int = Field(0, ge=0)

    # signal
    tones: List[str] = Field(default_factory=list)
    fsig: Optional[float] = Field(None, gt=0)
    fmax: Optional[float] = Field(None, gt=0)
    samples: Optional[int] = Field(None, ge=1)

    # statistics / calibration
    sigma: Optional[float] = Field(None, gt=0)
    step: Optional[float] = Field(None, gt=0)
    target: Optional[float] = None
    yield_target: float = Field(0.99, gt=0, lt=1)
    exclude_dc: bool = False
    exclude_nyquist: bool = False
    variants: bool = False
    validate_trials: Optional[int] = Field(None, ge=1)
    pmin_db: float = -120.0
    pmax_db: float = -40.0
    points: int = Field(161, ge=2)

    # sweep
    mode: Literal["step", "quantile"] = "step"
    target_from: float = -90.0
    target_to: float = -70.0
    target_step: float = Field(1.0, gt=0)
    steps: Optional[List[float]] = None

    # Monte-Carlo
    trials: int = Field(10_000_000, ge=1)
    level: float = Field(1e-4, gt=0, lt=1)
    bin: str = "pooled"
    workers: int = Field(1, ge=1)
    chunk_size: int = Field(100_000, ge=1)
    algorithm: str = ALGORITHM

    # output
    format: Literal["json", "csv"] = "json"
    output: Optional[str] = None
    spectrum_output: Optional[str] = None

    @field_validator("offsets", "gains", "skews", "steps", mode="before")
    @classmethod
    def _split_lists(cls, value: Any) -> Any:
        if value is None or isinstance(value, list):
            return value
        return parse_float_list(value)

    @field_validator("algorithm")
    @classmethod
    def _known_algorithm(cls, value: str) -> str:
        try:
            return check_algorithm(value)
        except InvalidInputError as exc:
            raise ValueError(str(exc)) from exc

    @field_validator("tones", mode="before")
    @classmethod
    def _tone_list(cls, value: Any) -> Any:
        if isinstance(value, (str, int, float)):
            return [str(value)]
        return [str(v) for v in value]

    @model_validator(mode="after")
    def _check_sources(self) -> "RunConfig":
        if self.command in MISMATCH_COMMANDS:
            inline = any(v is not None for v in (self.offsets, self.gains, self.skews))
            sources = [inline, self.mismatch_file is not None, self.dist is not None]
            if sum(sources) != 1:
                raise ValueError(
                    "give exactly one mismatch source: inline values, "
                    "--mismatch-file, or --dist"
                )
            if self.dist is not None and (self.width is None or self.kind == "all"):
                raise ValueError("--dist needs --width and a single --kind")
        if self.command in STATISTICS_COMMANDS:
            if self.kind == "all":
                raise ValueError(f"{self.command} needs --kind offset|gain|skew")
            if self.kind == "skew" and self.signal_frequency is None:
                raise ValueError("skew statistics need --fsig or --fmax")
        if self.command in ("cdf",) and (self.sigma is None) == (self.step is None):
            raise ValueError("cdf needs exactly one of --sigma / --step")
        if self.command == "yield" and self.target is None:
            raise ValueError("yield needs --target")
        return self

    @classmethod
    def from_sources(
        cls, defaults: Dict[str, Any], config_file: Optional[str], flags: Dict[str, Any]
    ) -> "RunConfig":
        """defaults < --config JSON file < explicit flags"""
        merged = dict(defaults)
        if config_file:
            try:
                with open(config_file, "r") as f:
                    data = json.load(f)
            except (OSError, json.JSONDecodeError) as exc:
                raise InvalidInputError(f"cannot load run config {config_file}: {exc}") from exc
            if not isinstance(data, dict):
                raise InvalidInputError(f"{config_file} must hold a JSON object")
            merged.update(data)
        merged.update({k: v for k, v in flags.items() if v is not None})
        return cls(**merged)

    @property
    def signal_frequency(self) -> Optional[float]:
        """--fsig, else the full-band worst case --fmax"""
        return self.fsig if self.fsig is not None else self.fmax

    @property
    def mismatch_kind(self) -> Optional[MismatchKind]:
        return None if self.kind == "all" else MismatchKind(self.kind)

    def adc_config(self) -> AdcConfig:
        return AdcConfig(interleave_factor=self.n, sample_rate=self.fs, resolution_bits=self.bits)

    def tone_specs(self) -> List[ToneSpec]:
        tones = [parse_tone(t) for t in self.tones]
        if not tones and self.signal_frequency is not None:
            tones = [ToneSpec(self.signal_frequency)]
        return tones

    def distribution(self) -> DistributionSpec:
        if self.dist == "uniform":
            return DistributionSpec.uniform(self.width)
        return DistributionSpec.gaussian(self.width)

    def mismatch_set(self) -> MismatchSet:
        """Build the device mismatch from whichever single source was given"""
        if self.mismatch_file is not None:
            return read_mismatch_file(self.mismatch_file, self.mismatch_kind)
        if self.dist is not None:
            values = sample_mismatch(self.distribution(), self.n, self.seed, self.algorithm)
            return MismatchSet.of_kind(self.mismatch_kind, values)

        given = {
            MismatchKind.OFFSET: self.offsets,
            MismatchKind.GAIN: self.gains,
            MismatchKind.SKEW: self.skews,
        }
        length = next(len(v) for v in given.values() if v is not None)
        for kind, values in given.items():
            if values is not None and len(values) != length:
                raise InvalidInputError(
                    f"--{kind.value}s has {len(values)} values, expected {length}"
                )
        fill = [0.0] * length
        return MismatchSet(
            given[MismatchKind.OFFSET] or fill,
            given[MismatchKind.GAIN] or fill,
            given[MismatchKind.SKEW] or fill,
        )

    def parameters(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True, exclude={"output", "spectrum_output"})
