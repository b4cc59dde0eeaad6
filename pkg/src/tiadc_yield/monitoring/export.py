# src/tiadc_yield/monitoring/export.py
"""
Result collection and CSV / JSON export.

CSV files start with one '# {json}' metadata line (version, command, seed,
parameters, timestamp) followed by a plain header + body. Files are written
to a temporary sibling and renamed, so a failed run never leaves a partial file.
"""
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from tiadc_yield import __version__

DEFAULT_FLOAT_FORMAT = "%.10g"
METADATA_PREFIX = "# "


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def _finite_or_str(value: Any) -> Any:
    """Map +-inf / nan to strings so JSON output stays standard"""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _finite_or_str(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_str(v) for v in value]
    return value


def to_json(payload: Dict[str, Any]) -> str:
    cleaned = _finite_or_str(json.loads(json.dumps(payload, default=_json_default)))
    return json.dumps(cleaned, indent=2, allow_nan=False) + "\n"


def run_metadata(
    command: str,
    parameters: Dict[str, Any],
    seed: Optional[int] = None,
    units: Optional[Dict[str, str]] = None,
) -> Dict[str, Any]:
    return {
        "version": __version__,
        "command": command,
        "seed": seed,
        "parameters": parameters,
        "units": units or {},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def render_csv(
    frame: pd.DataFrame,
    metadata: Optional[Dict[str, Any]] = None,
    float_format: str = DEFAULT_FLOAT_FORMAT,
) -> str:
    header = ""
    if metadata is not None:
        header = METADATA_PREFIX + json.dumps(metadata, default=_json_default) + "\n"
    return header + frame.to_csv(index=False, float_format=float_format, lineterminator="\n")


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Load a CSV written by render_csv, skipping the metadata line"""
    return pd.read_csv(path, skiprows=_metadata_lines(path))


def read_metadata(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r") as f:
        first = f.readline()
    if not first.startswith(METADATA_PREFIX):
        return {}
    return json.loads(first[len(METADATA_PREFIX) :])


def _metadata_lines(path: Union[str, Path]) -> int:
    with open(path, "r") as f:
        return 1 if f.readline().startswith(METADATA_PREFIX) else 0


def resolve_path(path: Union[str, Path], base: Union[str, Path]) -> Path:
    """Relative paths land under `base`; absolute ones are kept"""
    path = Path(path).expanduser()
    return path if path.is_absolute() else Path(base) / path


def atomic_write(path: Union[str, Path], text: str) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return str(path)


@dataclass
class ResultCollector:
    """Accumulates the tables, scalars and warnings of one command"""

    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    units: Dict[str, str] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    table: Optional[pd.DataFrame] = None
    warnings: List[str] = field(default_factory=list)

    def record(self, **values: Any) -> None:
        self.results.update(values)

    def warn(self, message: Optional[str]) -> None:
        if message and message not in self.warnings:
            self.warnings.append(message)

    def metadata(self) -> Dict[str, Any]:
        return run_metadata(self.command, self.parameters, self.seed, self.units)

    def summary(self) -> Dict[str, Any]:
        payload = {
            "metadata": self.metadata(),
            "results": self.results,
            "warnings": list(self.warnings),
            "warning_count": len(self.warnings),
        }
        if self.table is not None:
            payload["table"] = self.table.to_dict(orient="records")
        return payload

    def render(self, fmt: str, float_format: str = DEFAULT_FLOAT_FORMAT) -> str:
        if fmt == "csv":
            frame = self.table if self.table is not None else pd.DataFrame([self.results])
            return render_csv(frame, self.metadata(), float_format)
        return to_json(self.summary())

    def save(
        self, filename: str, fmt: str = "json", float_format: str = DEFAULT_FLOAT_FORMAT
    ) -> str:
        return atomic_write(filename, self.render(fmt, float_format))
