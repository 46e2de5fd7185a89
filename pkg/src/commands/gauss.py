"""
gauss.py

Perimeter and Gauss residual of a rasterized region over refinement levels.
"""

import logging
from typing import Callable, Dict, List, Tuple

from calculus import gauss
from calculus.geometry import CellSet, Partition, rasterize
from framework.output import write_csv, write_json
from framework.provenance import describe
from models.config import RunConfig
from models.reports import StudySummary

logger = logging.getLogger(__name__)

NAME = "gauss"
HELP = "perimeter and Gauss-theorem residual of a region over refinement levels"

DEFAULT_CELLS = [8, 8]


def left_half(partition: Partition, index: int) -> CellSet:
    return rasterize(partition, lambda c: c[:, 0] < 0.5 * (partition.domain.lower[0] + partition.domain.upper[0]))


REGIONS: Dict[str, Callable[[Partition, int], CellSet]] = {
    "disk": lambda partition, index: gauss.disk_region(partition),
    "koch": lambda partition, index: gauss.koch_region(partition, depth=index + 1),
    "cells": left_half,
}


def run(config: RunConfig) -> Tuple[int, List[str]]:
    if not {"cells", "domain_lower", "domain_upper"} & config.model_fields_set:
        config = config.with_defaults(cells=DEFAULT_CELLS)
    if config.region != "cells" and config.dimension != 2:
        logger.warning(f"Region {config.region} is two-dimensional; using the unit square")
        config = config.model_copy(update={"domain_lower": [0.0, 0.0], "domain_upper": [1.0, 1.0],
                                           "cells": config.cells * 2 if len(config.cells) == 1 else config.cells})

    tol = config.tolerance(NAME)
    table, report = gauss.perimeter_study(config.partition(), REGIONS[config.region], config.levels,
                                          degree=config.degree, seeds_per_cell=config.resolved_seeds(NAME),
                                          region_name=config.region, smooth_degree=config.smooth_degree)
    bounds = tol * (1.0 + table["lhs"].abs())
    ok = bool((table["residual"] <= bounds).all())

    summary = StudySummary(quantity=f"perimeter_{config.region}", levels=table.to_dict(orient="records"),
                           error=float(table["residual"].max()), passed=ok)
    provenance = describe(NAME, config, level=report.level)
    outputs = [
        write_csv(table, config.out, f"gauss_{config.region}.csv", provenance),
        write_json(summary.model_dump(), config.out, f"gauss_{config.region}.json", provenance),
    ]
    if not ok:
        logger.error(f"Gauss residual {table['residual'].max():.3e} above {tol:.1e}·(1+|lhs|) for {config.region}")
        return 1, outputs
    return 0, outputs
