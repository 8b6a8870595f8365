"""
Result documents: JSON summaries and CSV traces written by the CLI.

Document format:
{
  "schema_version": "1.0",
  "tool_version":   "1.0.0",
  "command":        "diskmargin",
  "arguments":      {"skew": 0.0, ...},
  "input_digest":   "<sha256 of the model file>",
  "timestamp":      "2026-01-01T00:00:00+00:00",
  "results":        {...},
  "diagnostics":    ["..."]
}

Encoding of values that JSON has no literal for:
  complex    {"re": x, "im": y}
  +-inf      "inf" / "-inf"
  nan        null
"""
from __future__ import annotations
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from dmkit import config
from dmkit.exceptions import ModelFileError, ModelInputError

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def encode(value: Any) -> Any:
    """Plain-JSON form of *value* (floats, complex, arrays, enums, tuples)."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, (complex, np.complexfloating)):
        v = complex(value)
        return {"re": encode(v.real), "im": encode(v.imag)}
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    return value


def decode(value: Any) -> Any:
    if isinstance(value, str) and value in ("inf", "-inf"):
        return float(value)
    if isinstance(value, dict):
        if set(value) == {"re", "im"}:
            re, im = decode(value["re"]), decode(value["im"])
            return complex(math.nan if re is None else re, math.nan if im is None else im)
        return {k: decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [decode(v) for v in value]
    return value


def db_fields(name: str, gain: float) -> dict[str, float]:
    """{name}_db for a finite nonzero gain, nothing otherwise."""
    if gain is None or gain <= 0 or not math.isfinite(gain):
        return {}
    return {f"{name}_db": 20.0 * math.log10(gain)}


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------

@dataclass
class ResultDocument:
    command: str
    arguments: dict[str, Any]
    input_digest: str
    results: dict[str, Any]
    diagnostics: list[str] = field(default_factory=list)
    schema_version: str = config.SCHEMA_VERSION
    tool_version: str = config.TOOL_VERSION
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "tool_version":   self.tool_version,
            "command":        self.command,
            "arguments":      encode(self.arguments),
            "input_digest":   self.input_digest,
            "timestamp":      self.timestamp,
            "results":        encode(self.results),
            "diagnostics":    list(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ResultDocument:
        try:
            return cls(
                command=data["command"],
                arguments=decode(data["arguments"]),
                input_digest=data["input_digest"],
                results=decode(data["results"]),
                diagnostics=list(data.get("diagnostics", [])),
                schema_version=data["schema_version"],
                tool_version=data["tool_version"],
                timestamp=data["timestamp"])
        except (KeyError, TypeError) as e:
            raise ModelFileError(f"not a result document: missing {e}") from e


def load_document(path: str | Path) -> ResultDocument:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFileError(f"[documents] load failed: {e}") from e
    return ResultDocument.from_dict(data)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def write_text(text: str, out: str | Path | None, echo) -> None:
    """Send *text* to *out*, or to *echo* (stdout) when no path is given."""
    if out is None:
        echo(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text if text.endswith("\n") else text + "\n")
    except OSError as e:
        raise ModelInputError(f"[documents] write failed: {e}") from e
    log.info("wrote %s", out)


def table_csv(columns: dict[str, Any]) -> str:
    """CSV text of equal-length columns, in the given column order."""
    frame = pd.DataFrame({k: np.asarray(v, dtype=float) for k, v in columns.items()})
    return frame.to_csv(index=False, float_format="%.17g")


def read_csv(path: str | Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise ModelFileError(f"[documents] load failed: {e}") from e
