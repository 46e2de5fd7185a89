import logging
from typing import List, Tuple

import numpy as np

from calculus import variational
from calculus.basis import to_frame
from commands.check import level_options
from framework.output import write_csv, write_json
from framework.provenance import describe
from models.config import RunConfig
from models.reports import StudySummary

logger = logging.getLogger(__name__)

NAME = "poisson"
HELP = "solve the generalized Poisson problem over refinement levels"

# Error reduction required per refinement when the discrete solution is not exact.
MIN_RATIO = 3.0


def passed(table, tolerance: float) -> bool:
    """Exact to `tolerance` on every level, or the error shrinks at least MIN_RATIO× per level."""
    errors = table["max_error"].to_numpy()
    if np.all(errors <= tolerance):
        return True
    return bool(np.all(errors[1:] * MIN_RATIO <= errors[:-1]))


def run(config: RunConfig) -> Tuple[int, List[str]]:
    partition = config.partition()
    table, u = variational.poisson_study(partition, config.degree, config.levels, config.resolved_seeds(NAME),
                                         config.smooth_degree, **level_options(config))
    ok = passed(table, config.tolerance("poisson"))

    _, exact = variational.poisson_oracle(u.basis.partition)
    profile = to_frame(u)
    profile["exact"] = exact(u.basis.points)

    summary = StudySummary(quantity="poisson_error", levels=table.to_dict(orient="records"),
                           error=float(table["max_error"].iloc[-1]), passed=ok)
    provenance = describe(NAME, config, level=u.basis.partition.level)
    outputs = [
        write_csv(table, config.out, "poisson_study.csv", provenance),
        write_csv(profile, config.out, "poisson_profile.csv", provenance),
        write_json(summary.model_dump(), config.out, "poisson_summary.json", provenance),
    ]
    if not ok:
        logger.error(f"Poisson errors {table['max_error'].tolist()} neither exact nor shrinking {MIN_RATIO}× per level")
        return 1, outputs
    return 0, outputs
