# src/tiadc_yield/utils/config.py
"""
Runtime settings.

Values come from config/default.yaml (or an explicit YAML path), are
overridden by TIADC_* environment variables and a local .env file, and
finally by CLI flags.
"""
import logging
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import yaml
from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from tiadc_yield.core.errors import InvalidInputError
from tiadc_yield.core.types import AdcConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path("config/default.yaml")
CONFIG_ENV_VAR = "TIADC_CONFIG"

BitGenerator = Literal["PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937"]


class AdcSection(BaseModel):
    interleave_factor: int = Field(16, ge=2)
    sample_rate: float = Field(25.6e9, gt=0)
    resolution_bits: int = Field(12, ge=1)


class SimulationSection(BaseModel):
    capture_multiplier: int = Field(4096, ge=1)


class MonteCarloSection(BaseModel):
    trials: int = Field(10_000_000, ge=1)
    chunk_size: int = Field(100_000, ge=1)
    workers: int = Field(1, ge=1)
    ccdf_min: float = Field(1e-2, gt=0)
    ccdf_max: float = Field(1e2, gt=0)
    ccdf_points: int = Field(400, ge=2)
    algorithm: BitGenerator = "PCG64"


class CalibrationSection(BaseModel):
    yield_target: float = Field(0.99, gt=0, lt=1)
    bracket_factor: float = Field(4.0, gt=1)
    max_expansions: int = Field(60, ge=1)
    rtol: float = Field(1e-9, gt=0)


class LoggingSection(BaseModel):
    level: str = "INFO"
    file: Optional[str] = None
    max_bytes: int = 10 * 1024 * 1024
    backup_count: int = 5


class OutputSection(BaseModel):
    float_format: str = "%.10g"
    # relative --output and --spectrum-output paths resolve here
    output_dir: str = "."


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="TIADC_",
        env_nested_delimiter="__",
        env_file=".env",
        extra="ignore",
    )

    adc: AdcSection = AdcSection()
    simulation: SimulationSection = SimulationSection()
    montecarlo: MonteCarloSection = MonteCarloSection()
    calibration: CalibrationSection = CalibrationSection()
    logging: LoggingSection = LoggingSection()
    output: OutputSection = OutputSection()

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        # YAML values arrive as init kwargs; environment wins over them
        return env_settings, dotenv_settings, init_settings, file_secret_settings

    def adc_config(self) -> AdcConfig:
        return AdcConfig(
            interleave_factor=self.adc.interleave_factor,
            sample_rate=self.adc.sample_rate,
            resolution_bits=self.adc.resolution_bits,
        )


def read_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
    except OSError as exc:
        raise InvalidInputError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InvalidInputError(f"malformed YAML in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path} must hold a mapping of sections")
    return data


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """
    Build Settings from a YAML file.

    Args:
        path: explicit YAML path; falls back to $TIADC_CONFIG, then
            config/default.yaml when present, then built-in defaults
    """
    if path is None:
        env_path = os.environ.get(CONFIG_ENV_VAR)
        if env_path:
            path = Path(env_path)
        elif DEFAULT_CONFIG_PATH.exists():
            path = DEFAULT_CONFIG_PATH

    data = read_yaml(path) if path is not None else {}
    logger.debug("Loading settings from %s", path or "built-in defaults")
    return Settings(**data)
