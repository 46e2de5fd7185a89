import logging
import socket
import time
import uuid
import datetime
import traceback
from contextlib import contextmanager
from opentelemetry.sdk._logs import LoggingHandler

# Configure logger
telemetry_logger = logging.getLogger("telemetry")
telemetry_logger.setLevel(logging.INFO)

if not telemetry_logger.handlers:
    telemetry_logger.addHandler(LoggingHandler())


@contextmanager
def run_logging(command: str, config_hash: str = None):
    """
    Structured start/finish logging around one command run.

    Every run gets a transaction id. A dict record is logged when the run
    starts and when it finishes; an exception escaping the run is logged with
    its stack trace and re-raised. The body receives a mutable `outcome`
    dict and may set `status` (exit code) and append to `outputs`.

    Logging fields include:
        - level: log severity (INFO/ERROR)
        - event: "Start", "Finish" or "Unhandled Exception"
        - command: subcommand name
        - config_hash: hash of the resolved configuration
        - timestamp: UTC time of the record
        - hostname: host running the command
        - transaction_id: UUID assigned to this run
        - duration_seconds: wall time (finish and error records)
        - status: exit code (finish only)
        - outputs: written file names (finish only)
        - exception: exception string (error cases)
        - stack_trace: traceback string (error cases)

    Example log for a finished run:
        {
            "level": "INFO",
            "event": "Finish",
            "command": "poisson",
            "config_hash": "3f2a...",
            "timestamp": "2025-08-12T22:18:30.123Z",
            "hostname": "my-server",
            "transaction_id": "f1a2c3d4-5678-90ab-cdef-1234567890ab",
            "duration_seconds": 1.2345,
            "status": 0,
            "outputs": ["poisson_study.csv", "poisson_summary.json"]
        }

    Example:
        >>> with run_logging("check", "abc") as outcome:
        ...     outcome["status"] = 0
    """
    transaction_id = str(uuid.uuid4())
    start_time = time.time()
    outcome = {"status": 0, "outputs": []}

    telemetry_logger.info({
        "level": "INFO",
        "event": "Start",
        "command": command,
        "config_hash": config_hash,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "hostname": socket.gethostname(),
        "transaction_id": transaction_id
    })

    try:
        yield outcome
    except Exception as e:
        stack_trace = traceback.format_exc()
        telemetry_logger.error({
            "level": "ERROR",
            "event": "Unhandled Exception",
            "command": command,
            "config_hash": config_hash,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "duration_seconds": round(time.time() - start_time, 4),
            "exception": str(e),
            "stack_trace": stack_trace,
            "transaction_id": transaction_id
        })
        raise e

    duration = time.time() - start_time
    telemetry_logger.info({
        "level": "INFO",
        "event": "Finish",
        "command": command,
        "config_hash": config_hash,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "hostname": socket.gethostname(),
        "duration_seconds": round(duration, 4),
        "status": outcome["status"],
        "transaction_id": transaction_id,
        "outputs": list(outcome["outputs"])
    })
