"""
refine_study.py

Per-level tables of one registered quantity: the perimeter of a region, the
pairing of a singular ultrafunction with a test function, or a solution error.
"""

import logging
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd

from calculus import distrib, gauss, variational
from calculus.basis import project
from calculus.level import build_level, refinement_levels
from commands.check import level_options
from commands.gauss import REGIONS
from framework.output import write_csv, write_json
from framework.provenance import describe
from models.config import RunConfig
from models.reports import StudySummary

logger = logging.getLogger(__name__)

NAME = "refine-study"
HELP = "tabulate a quantity over successive refinement levels"

SMOOTH_GAMMA = 1.5
MIN_RATIO = 3.0
ERROR_FLOOR = 1e-9


def singular_profile(points: np.ndarray) -> np.ndarray:
    return 1.0 / np.sqrt(np.abs(points[:, 0] - 0.5))


def linear_test(points: np.ndarray) -> np.ndarray:
    return 1.0 + points[:, 0]


def perimeter_quantity(config: RunConfig) -> Tuple[pd.DataFrame, StudySummary]:
    if config.dimension != 2:
        config = config.model_copy(update={"domain_lower": [0.0, 0.0], "domain_upper": [1.0, 1.0],
                                           "cells": [config.cells[0]] * 2})
    table, _ = gauss.perimeter_study(config.partition(), REGIONS[config.region], config.levels,
                                     degree=config.degree, seeds_per_cell=config.resolved_seeds(NAME),
                                     region_name=config.region, smooth_degree=config.smooth_degree)
    values = table["perimeter"].to_numpy()
    if config.region == "koch":
        ok = bool(np.all(np.diff(values) > 0.0))
        return table, StudySummary(quantity="perimeter", levels=table.to_dict(orient="records"), passed=ok)
    limit, error, order = distrib.extrapolate(values)
    return table, StudySummary(quantity="perimeter", levels=table.to_dict(orient="records"),
                               limit=limit, error=error, order=order)


def pairing_quantity(config: RunConfig) -> Tuple[pd.DataFrame, StudySummary]:
    """⟨u, 1 + x⟩ for u the projection of |x - ½|^(-1/2) on [0, 1]; the limit is 3√2."""
    if config.levels < 2:
        logger.warning("A pairing study needs two levels; running two")
    partitions = list(refinement_levels(config.partition(), max(config.levels, 2)))
    options = level_options(config)

    def builder(index: int):
        level = build_level(partitions[index], config.degree, config.resolved_seeds(NAME),
                            config.smooth_degree, **options)
        return project(level.basis, singular_profile,
                       undefined=lambda p: np.isclose(p[:, 0], 0.5, rtol=0.0, atol=1e-14))

    study = distrib.standard_part_study(builder, linear_test, len(partitions))
    return study.table, StudySummary(quantity="pairing", levels=study.table.to_dict(orient="records"),
                                     limit=study.limit, error=study.error, order=study.order)


def shrinking(errors: np.ndarray) -> bool:
    return bool(np.all(errors[1:] <= np.maximum(errors[:-1] / MIN_RATIO, ERROR_FLOOR)))


def poisson_quantity(config: RunConfig) -> Tuple[pd.DataFrame, StudySummary]:
    table, _ = variational.poisson_study(config.partition(), config.degree, config.levels,
                                         config.resolved_seeds(NAME), config.smooth_degree, **level_options(config))
    errors = table["max_error"].to_numpy()
    ok = bool(np.all(errors <= config.tolerance("poisson"))) or shrinking(errors)
    return table, StudySummary(quantity="poisson_error", levels=table.to_dict(orient="records"),
                               error=float(errors[-1]), passed=ok)


def smooth_quantity(config: RunConfig) -> Tuple[pd.DataFrame, StudySummary]:
    gamma = config.gamma if config.gamma < 2.0 else SMOOTH_GAMMA
    table = variational.smooth_study(gamma, config.partition(), config.degree, config.levels,
                                     max_iterations=config.max_iterations, seed=config.seed)
    errors = table["max_error"].to_numpy()
    return table, StudySummary(quantity="smooth_error", levels=table.to_dict(orient="records"),
                               error=float(errors[-1]), passed=shrinking(errors))


QUANTITIES: Dict[str, Callable[[RunConfig], Tuple[pd.DataFrame, StudySummary]]] = {
    "perimeter": perimeter_quantity,
    "pairing": pairing_quantity,
    "poisson_error": poisson_quantity,
    "smooth_error": smooth_quantity,
}


def run(config: RunConfig) -> Tuple[int, List[str]]:
    if config.quantity in ("pairing", "smooth_error") and config.dimension != 1:
        logger.warning(f"{config.quantity} is a 1D study; using [0, 1]")
        config = config.model_copy(update={"domain_lower": [0.0], "domain_upper": [1.0], "cells": config.cells[:1]})

    table, summary = QUANTITIES[config.quantity](config)
    provenance = describe(NAME, config, quantity=config.quantity)
    outputs = [
        write_csv(table, config.out, f"refine_{config.quantity}.csv", provenance),
        write_json(summary.model_dump(), config.out, f"refine_{config.quantity}.json", provenance),
    ]
    if not summary.passed:
        logger.error(f"Refinement study of {config.quantity} failed its acceptance rule")
        return 1, outputs
    return 0, outputs
