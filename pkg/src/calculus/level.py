"""
level.py

Everything needed to compute at one refinement level, built in one call:
partition → seeds → local spaces → Γ basis → split → derivative operators.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from calculus.basis import GammaBasis, build_gamma
from calculus.derivative import DerivOperator, SpaceSplit, assemble_D, build_split
from calculus.geometry import Partition, refine
from calculus.localspace import LocalSpace, SeedSet, build_local_spaces, make_seeds

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Level:
    partition: Partition
    seeds: SeedSet
    spaces: Sequence[LocalSpace]
    basis: GammaBasis
    split: SpaceSplit
    operators: Tuple[DerivOperator, ...]
    natural_sides: Tuple = ()

    @property
    def h(self) -> float:
        return self.partition.h


def build_level(partition: Partition, degree: int, seeds_per_cell: int = 0,
                smooth_degree: Optional[int] = None, natural_sides: Sequence = (),
                pivot_tol: float = 1e-8, condition_limit: float = 1e12,
                quadrature_tol: float = 1e-13) -> Level:
    """
    Build the basis and the derivative operators of one partition.

    Args:
        partition: Cells of this level.
        degree: Modal degree k.
        seeds_per_cell: Seeds per cell (0 for seedless spaces).
        smooth_degree: Degree k₁ of the polynomial part of V¹(Q).
        natural_sides: Sides with a free-end exterior state.
        pivot_tol, condition_limit, quadrature_tol: Basis tolerances.

    Returns:
        Level
    """
    seeds = make_seeds(partition, seeds_per_cell, degree)
    spaces = build_local_spaces(partition, degree, seeds, quadrature_tol)
    basis = build_gamma(partition, spaces, seeds, pivot_tol=pivot_tol, condition_limit=condition_limit)
    split = build_split(basis, smooth_degree)
    operators = tuple(assemble_D(partition, basis, split, axis, natural_sides)
                      for axis in range(partition.dimension))
    return Level(partition, seeds, spaces, basis, split, operators, tuple(tuple(s) for s in natural_sides))


def refinement_levels(partition: Partition, count: int):
    """Yield `count` partitions starting with `partition`, each the refinement of the previous."""
    current = partition
    for i in range(count):
        yield current
        if i + 1 < count:
            current = refine(current)
