"""
Configuration Loading

This module provides:
- Validation of the environment variables the commands read.
- Layering of the run configuration: built-in defaults < JSON file < flags.
- A stable hash of a resolved configuration for provenance.

Environment Variables:
    TESTING            - "true" switches logging to a plain stream handler
    ULTRAFUN_CONFIG    - Path of a JSON config used when --config is not given
    ULTRAFUN_OUT       - Output directory used when neither the file nor --out sets one
    ULTRAFUN_LOG_LEVEL - Root logging level name (default: INFO)

"""

import hashlib
import json
import logging
import os
from typing import Any, Dict, Optional

from models.config import RunConfig

logger = logging.getLogger(__name__)

LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


def load_environment() -> Dict[str, Optional[str]]:
    """
    Read and validate the environment.

    Returns:
        dict: config_path, out and log_level (None when unset).

    Raises:
        EnvironmentError: If ULTRAFUN_LOG_LEVEL is not a logging level name or
            ULTRAFUN_CONFIG names a missing file.
    """
    log_level = os.getenv("ULTRAFUN_LOG_LEVEL", "INFO").upper()
    if log_level not in LOG_LEVELS:
        raise EnvironmentError(
            f"Invalid environment variables: ULTRAFUN_LOG_LEVEL={log_level} (expected one of {', '.join(LOG_LEVELS)})"
        )
    config_path = os.getenv("ULTRAFUN_CONFIG") or None
    if config_path is not None and not os.path.isfile(config_path):
        raise EnvironmentError(f"Missing required environment variables: ULTRAFUN_CONFIG file {config_path} not found")
    return {"config_path": config_path, "out": os.getenv("ULTRAFUN_OUT") or None, "log_level": log_level}


def read_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Failed to read config file {path}: {str(e)}")
        raise ValueError(f"Config file {path} could not be read: {str(e)}") from e
    if not isinstance(data, dict):
        raise ValueError(f"Config file {path} must hold a JSON object")
    return data


def parse_tolerances(items) -> Dict[str, float]:
    """Parse repeated NAME=VAL flags."""
    tolerances = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ValueError(f"Tolerance override must look like NAME=VAL, got {item!r}")
        tolerances[name.strip()] = float(value)
    return tolerances


def load_config(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                environment: Optional[Dict[str, Optional[str]]] = None) -> RunConfig:
    """
    Resolve the run configuration.

    Args:
        config_path (str, optional): JSON config; ULTRAFUN_CONFIG when omitted.
        overrides (dict, optional): Flag values; None entries are ignored.
        environment (dict, optional): Result of `load_environment()`.

    Returns:
        RunConfig

    Raises:
        ValueError: If the file cannot be read.
        pydantic.ValidationError: If the merged values are invalid.

    Example:
        >>> load_config(overrides={"degree": 3}).degree
        3
    """
    environment = environment if environment is not None else load_environment()
    values: Dict[str, Any] = {}
    if environment.get("out"):
        values["out"] = environment["out"]
    path = config_path or environment.get("config_path")
    if path:
        values.update(read_config_file(path))
        logger.info(f"Loaded config file {path}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "tolerances":
            values["tolerances"] = {**values.get("tolerances", {}), **value}
        else:
            values[key] = value
    return RunConfig.model_validate(values)


def config_hash(config: RunConfig) -> str:
    payload = json.dumps(config.model_dump(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
