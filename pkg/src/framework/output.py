"""
CSV and JSON writers with provenance headers.

CSV files start with `# key=value` lines and are read back with
`pandas.read_csv(path, comment="#")`; JSON files carry a `provenance` object.
"""

import json
import logging
import math
import os
from typing import Any, Dict

import pandas as pd

logger = logging.getLogger(__name__)


def _flatten(record: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def write_csv(frame: pd.DataFrame, directory: str, name: str, provenance: Dict[str, Any]) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    header = "".join(f"# {key}={json.dumps(value)}\n" for key, value in sorted(_flatten(provenance).items()))
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(header)
        frame.to_csv(handle, index=False, lineterminator="\n", float_format="%.12g")
    logger.info(f"Wrote {path} ({len(frame)} rows)")
    return path


def _clean(value):
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(data: Dict[str, Any], directory: str, name: str, provenance: Dict[str, Any]) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    payload = _clean({**data, "provenance": provenance})
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(json.dumps(payload, sort_keys=True, indent=2))
        handle.write("\n")
    logger.info(f"Wrote {path}")
    return path


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")
