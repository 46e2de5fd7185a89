"""
check.py

Runs every identity suite on a 1D and a 2D level and writes check_report.json.
Exit status 0 iff every suite stays within its tolerance.
"""

import logging
from typing import List, Tuple

from calculus.geometry import Domain, build_partition
from calculus.level import Level, build_level
from calculus.suites import SUITES, run_suite
from framework.output import write_json
from framework.provenance import describe
from models.config import RunConfig
from models.reports import CheckReport, SuiteResult

logger = logging.getLogger(__name__)

NAME = "check"
HELP = "run the identity suites and write a pass/fail report"

# Levels used for the dimension the config does not describe.
COMPANION_CELLS = {1: [8], 2: [4, 4]}


def level_options(config: RunConfig) -> dict:
    return {
        "pivot_tol": config.tolerance("pivot"),
        "condition_limit": config.tolerance("gram_condition"),
        "quadrature_tol": config.tolerance("quadrature"),
    }


def check_levels(config: RunConfig) -> List[Level]:
    """The seeded level of each dimension d = 1, 2."""
    levels = []
    for d in (1, 2):
        if config.dimension == d:
            partition = config.partition()
        else:
            partition = build_partition(Domain((0.0,) * d, (1.0,) * d), COMPANION_CELLS[d])
        seeds = config.resolved_seeds(NAME, dimension=d)
        levels.append(build_level(partition, config.degree, seeds, config.smooth_degree, **level_options(config)))
    return levels


def run(config: RunConfig) -> Tuple[int, List[str]]:
    """
    Run the suites in a fixed order and report the first failure.

    Returns:
        (status, outputs): 0 when every suite passes, 1 otherwise.
    """
    results = []
    for level in check_levels(config):
        d = level.partition.dimension
        for name, _ in SUITES:
            if name == "oracle" and d != 1:
                continue
            value = run_suite(name, level, config.seed)
            tolerance = config.tolerance(name)
            results.append(SuiteResult(suite=name, dimension=d, max_error=value, tolerance=tolerance,
                                       passed=bool(value <= tolerance)))

    failures = [r for r in results if not r.passed]
    first = f"{failures[0].suite} (d={failures[0].dimension})" if failures else None
    report = CheckReport(suites=results, passed=not failures, first_failure=first)
    path = write_json(report.model_dump(), config.out, "check_report.json", describe(NAME, config))
    if failures:
        logger.error(f"Suite {first} failed: max error {failures[0].max_error:.3e} > {failures[0].tolerance:.1e}")
        return 1, [path]
    logger.info(f"All {len(results)} suites passed")
    return 0, [path]
