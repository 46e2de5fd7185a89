import os
import socket
import datetime
from typing import Any, Dict, Optional

from framework.config import config_hash
from models.config import RunConfig

APP_NAME = "ultrafun"
VERSION = "1.0.0"
DESCRIPTION = "Finite-level ultrafunction calculus: Γ bases, generalized derivatives, Gauss and variational studies"


def info() -> Dict[str, str]:
    """
    Application information.

    Returns:
        dict: A dictionary containing runtime information about the application.
              Includes:
                - hostname (str): The system hostname where the app is running.
                - app_name (str): The name of the application.
                - version (str): The application version.
                - description (str): A brief description of the application.
                - app_env (str): The environment of the application (APP_ENV, default dev).
                - time (str): The current time, formatted as "HH:MM:SS AM/PM on YYYY-MM-DD".
    """
    return {
        'hostname': socket.gethostname(),
        'app_name': APP_NAME,
        'version': VERSION,
        'description': DESCRIPTION,
        'app_env': os.getenv("APP_ENV", "dev"),
        'time': datetime.datetime.now().strftime("%I:%M:%S %p on %Y-%m-%d")
    }


def describe(command: str, config: RunConfig, level: Optional[int] = None, **extra: Any) -> Dict[str, Any]:
    """
    Provenance written into every output file: everything needed to rerun it,
    nothing that changes between identical runs.
    """
    record = {
        "app_name": APP_NAME,
        "version": VERSION,
        "command": command,
        "config_hash": config_hash(config),
        "config": config.model_dump(),
        "tolerances": dict(config.tolerances),
    }
    if level is not None:
        record["level"] = level
    record.update(extra)
    return record
