import json
import logging
from typing import List, Tuple

from framework.provenance import info
from models.config import RunConfig

logger = logging.getLogger(__name__)

NAME = "info"
HELP = "print application and host information"


def run(config: RunConfig) -> Tuple[int, List[str]]:
    """
    Print the application information as JSON on stdout.

    Returns:
        (0, []): Nothing is written to the output directory.
    """
    record = info()
    logger.info(f"Info requested on {record['hostname']}")
    print(json.dumps(record, sort_keys=True, indent=2))
    return 0, []
