"""
geometry.py

Rectilinear partitions of a bounded interval or rectangle into cells, with
facets, adjacency and the density function θ_E of unions of cells.

Cells are numbered in C order over their per-axis index tuple. Every facet has
an owning cell and a neighbor (another cell or `EXTERIOR`); its stored normal
points out of the owning cell.
"""

import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from calculus.errors import GeometryError

logger = logging.getLogger(__name__)

EXTERIOR = -1
_SNAP = 1e-12


@dataclass(frozen=True)
class Domain:
    """
    Axis-aligned interval (d=1) or rectangle (d=2).

    Attributes:
        lower (tuple[float, ...]): Lower corner.
        upper (tuple[float, ...]): Upper corner.
    """
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if len(self.lower) != len(self.upper) or len(self.lower) not in (1, 2):
            raise GeometryError(f"Domain dimension must be 1 or 2, got corners {self.lower} and {self.upper}")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise GeometryError(f"Domain needs positive extent in every axis: {self.lower} .. {self.upper}")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, x, tol: float = _SNAP) -> bool:
        x = np.asarray(x, dtype=float)
        slack = tol * self.extent
        return bool(np.all(x >= np.asarray(self.lower) - slack) and np.all(x <= np.asarray(self.upper) + slack))

    def on_boundary(self, x, tol: float = _SNAP) -> bool:
        x = np.asarray(x, dtype=float)
        slack = tol * self.extent
        return bool(np.any(np.abs(x - np.asarray(self.lower)) <= slack) or np.any(np.abs(x - np.asarray(self.upper)) <= slack))


@dataclass(frozen=True, eq=False)
class Cell:
    id: int
    index: Tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray
    facets: Tuple[int, ...]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def measure(self) -> float:
        return float(np.prod(self.width))

    def contains(self, x, tol: float = _SNAP) -> bool:
        x = np.asarray(x, dtype=float)
        slack = tol * self.width
        return bool(np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack))


@dataclass(frozen=True, eq=False)
class Facet:
    """
    A (d-1)-dimensional face between `cell` and `neighbor`.

    `side` names the domain side, as (axis, "lower" | "upper"), for facets on ∂Ω.
    """
    id: int
    cell: int
    neighbor: int
    axis: int
    lower: np.ndarray
    upper: np.ndarray
    normal: np.ndarray
    side: Optional[Tuple[int, str]] = None

    @property
    def is_exterior(self) -> bool:
        return self.neighbor == EXTERIOR

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def measure(self) -> float:
        widths = np.delete(self.upper - self.lower, self.axis)
        return float(np.prod(widths)) if widths.size else 1.0

    def normal_from(self, cell_id: int) -> np.ndarray:
        if cell_id == self.cell:
            return self.normal
        if cell_id == self.neighbor:
            return -self.normal
        raise GeometryError(f"Cell {cell_id} does not bound facet {self.id}")

    def other(self, cell_id: int) -> int:
        return self.neighbor if cell_id == self.cell else self.cell


@dataclass
class Partition:
    """
    Uniform tensor partition of a Domain at refinement level `level`.

    `parents[c]` is the id of the cell that child `c` came from when the
    partition was produced by `refine`; it is None for a level built directly.
    """
    domain: Domain
    cells_per_axis: Tuple[int, ...]
    cells: List[Cell]
    facets: List[Facet]
    level: int = 0
    parents: Optional[np.ndarray] = None
    _adjacency: Dict[int, List[int]] = field(default_factory=dict, repr=False)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def widths(self) -> np.ndarray:
        return self.domain.extent / np.asarray(self.cells_per_axis, dtype=float)

    @property
    def h(self) -> float:
        return float(np.min(self.widths))

    def cell(self, cell_id: int) -> Cell:
        if not 0 <= cell_id < len(self.cells):
            raise GeometryError(f"Unknown cell id {cell_id} (partition has {len(self.cells)} cells)")
        return self.cells[cell_id]

    def cell_id(self, index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(index), self.cells_per_axis))

    def boundary_sides(self, cell_id: int) -> List[Tuple[bool, bool]]:
        """Per axis, whether the cell touches the lower and upper domain side."""
        index = self.cell(cell_id).index
        return [(i == 0, i == n - 1) for i, n in zip(index, self.cells_per_axis)]

    def touches_boundary(self, cell_id: int) -> bool:
        return any(lo or hi for lo, hi in self.boundary_sides(cell_id))

    def locate(self, x) -> List[Tuple[int, float]]:
        """
        Cells whose closure contains x, each with its small-ball fraction.

        The fraction is the product over axes of 1 (x strictly inside the
        cell's range) or 1/2 (x on one of its ends).

        Raises:
            GeometryError: If x lies outside the closed domain.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dimension or not self.domain.contains(x):
            logger.error(f"Point {x.tolist()} outside the closed domain")
            raise GeometryError(f"Point {x.tolist()} lies outside the closed domain")
        per_axis = []
        for axis, n in enumerate(self.cells_per_axis):
            t = (x[axis] - self.domain.lower[axis]) / self.widths[axis]
            j = int(round(t))
            if abs(t - j) <= _SNAP * max(1, n):
                choices = [(i, 0.5) for i in (j - 1, j) if 0 <= i < n]
            else:
                choices = [(min(max(int(np.floor(t)), 0), n - 1), 1.0)]
            per_axis.append(choices)
        located = []
        for combo in itertools.product(*per_axis):
            index = tuple(i for i, _ in combo)
            fraction = float(np.prod([f for _, f in combo]))
            located.append((self.cell_id(index), fraction))
        return located

    def to_dict(self) -> dict:
        return {
            "domain": {"lower": list(self.domain.lower), "upper": list(self.domain.upper)},
            "cells_per_axis": list(self.cells_per_axis),
            "level": self.level,
            "cells": [{"id": c.id, "lower": c.lower.tolist(), "upper": c.upper.tolist(),
                       "measure": c.measure, "facets": list(c.facets)} for c in self.cells],
            "facets": [{"id": f.id, "cell": f.cell, "neighbor": f.neighbor, "axis": f.axis,
                        "lower": f.lower.tolist(), "upper": f.upper.tolist(),
                        "normal": f.normal.tolist(), "measure": f.measure} for f in self.facets],
            "adjacency": {str(c.id): adjacency(self, c.id) for c in self.cells},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class CellSet:
    """A union of partition cells, given by their ids."""
    cells: FrozenSet[int]
    n_cells: int

    @classmethod
    def of(cls, partition: Partition, ids: Iterable[int]) -> "CellSet":
        ids = frozenset(int(i) for i in ids)
        bad = sorted(i for i in ids if not 0 <= i < len(partition.cells))
        if bad:
            raise GeometryError(f"CellSet contains unknown cell ids {bad}")
        return cls(ids, len(partition.cells))

    @classmethod
    def everything(cls, partition: Partition) -> "CellSet":
        return cls(frozenset(range(len(partition.cells))), len(partition.cells))

    def complement(self) -> "CellSet":
        return CellSet(frozenset(range(self.n_cells)) - self.cells, self.n_cells)

    def __contains__(self, cell_id: int) -> bool:
        return cell_id in self.cells

    def __len__(self) -> int:
        return len(self.cells)


def build_partition(domain: Domain, cells_per_axis: Sequence[int], level: int = 0) -> Partition:
    """
    Build the uniform tensor partition of `domain`.

    Args:
        domain (Domain): The bounding interval or rectangle.
        cells_per_axis (Sequence[int]): Number of cells along each axis.
        level (int): Refinement counter stored on the result.

    Returns:
        Partition: Cells, facets with axis-aligned normals and adjacency.

    Raises:
        GeometryError: If a resolution is not a positive integer or does not
            match the domain dimension.

    Example:
        >>> p = build_partition(Domain((0.0,), (1.0,)), [4])
        >>> len(p.cells), len(p.facets)
        (4, 5)
    """
    counts = tuple(int(n) for n in cells_per_axis)
    if len(counts) != domain.dimension:
        raise GeometryError(f"Expected {domain.dimension} resolutions, got {len(counts)}")
    if any(n < 1 for n in counts):
        raise GeometryError(f"Resolution must be positive in every axis, got {counts}")

    d = domain.dimension
    lower = np.asarray(domain.lower)
    widths = domain.extent / np.asarray(counts, dtype=float)

    indices = list(itertools.product(*[range(n) for n in counts]))
    facet_lists: Dict[int, List[int]] = {i: [] for i in range(len(indices))}
    facets: List[Facet] = []

    for axis in range(d):
        others = [range(n) if a != axis else [None] for a, n in enumerate(counts)]
        for plane in range(counts[axis] + 1):
            for cross in itertools.product(*others):
                below = list(cross)
                below[axis] = plane - 1
                above = list(cross)
                above[axis] = plane
                below_id = int(np.ravel_multi_index(tuple(below), counts)) if plane >= 1 else None
                above_id = int(np.ravel_multi_index(tuple(above), counts)) if plane < counts[axis] else None

                owner_index = below if below_id is not None else above
                f_lower = lower + widths * np.asarray(owner_index, dtype=float)
                f_upper = f_lower + widths
                coordinate = lower[axis] + widths[axis] * plane
                f_lower[axis] = coordinate
                f_upper[axis] = coordinate
                normal = np.zeros(d)
                side = None
                if below_id is not None and above_id is not None:
                    owner, neighbor = below_id, above_id
                    normal[axis] = 1.0
                elif below_id is None:
                    owner, neighbor = above_id, EXTERIOR
                    normal[axis] = -1.0
                    side = (axis, "lower")
                else:
                    owner, neighbor = below_id, EXTERIOR
                    normal[axis] = 1.0
                    side = (axis, "upper")
                facet = Facet(len(facets), owner, neighbor, axis, f_lower, f_upper, normal, side)
                facets.append(facet)
                facet_lists[owner].append(facet.id)
                if neighbor != EXTERIOR:
                    facet_lists[neighbor].append(facet.id)

    cells = []
    for cid, index in enumerate(indices):
        c_lower = lower + widths * np.asarray(index, dtype=float)
        cells.append(Cell(cid, tuple(index), c_lower, c_lower + widths, tuple(sorted(facet_lists[cid]))))

    partition = Partition(domain, counts, cells, facets, level=level)
    logger.info(f"Built partition level={level} cells={counts} facets={len(facets)}")
    return partition


def refine(partition: Partition) -> Partition:
    """Split every cell into 2^d children; the child-to-parent map is kept on the result."""
    counts = tuple(2 * n for n in partition.cells_per_axis)
    child = build_partition(partition.domain, counts, level=partition.level + 1)
    parents = np.array([partition.cell_id(tuple(i // 2 for i in c.index)) for c in child.cells], dtype=int)
    child.parents = parents
    return child


def adjacency(partition: Partition, cell_id: int) -> List[int]:
    """
    Neighbors 𝔜(Q) of a cell: cells sharing a facet of positive measure, plus
    EXTERIOR when the cell touches ∂Ω. Sorted, each reported once.
    """
    if cell_id in partition._adjacency:
        return partition._adjacency[cell_id]
    cell = partition.cell(cell_id)
    neighbors = sorted({partition.facets[f].other(cell_id) for f in cell.facets})
    partition._adjacency[cell_id] = neighbors
    return neighbors


def density_at(partition: Partition, E: CellSet, x, clipped: bool = False) -> float:
    """
    Density θ_E(x) of a union of cells at a point of the closed domain.

    1 inside E, 0 outside its closure, 1/2 on the relative interior of a facet
    of ∂E, the angle fraction at vertices (1/4 convex, 3/4 re-entrant). The
    small ball is taken in the whole space, so a point on ∂Ω sees at most the
    part of it inside Ω: θ_Ω is 1/2 on a side and 1/4 at a corner of a square.
    With `clipped` the ball is cut to Ω instead and θ_E + θ_{Ω∖E} = 1.

    Example:
        >>> density_at(square, CellSet.of(square, [0]), [0.0, 0.0])
        0.25
    """
    located = partition.locate(x)
    inside = sum(f for cid, f in located if cid in E)
    if clipped:
        return inside / sum(f for _, f in located)
    return inside


def density_many(partition: Partition, E: CellSet, points: np.ndarray, clipped: bool = False) -> np.ndarray:
    return np.array([density_at(partition, E, x, clipped) for x in np.atleast_2d(points)])


def rasterize(partition: Partition, inside: Callable[[np.ndarray], np.ndarray]) -> CellSet:
    """CellSet of the cells whose center satisfies `inside` (vectorized over an (m, d) array)."""
    centers = np.array([c.center for c in partition.cells])
    mask = np.asarray(inside(centers), dtype=bool)
    return CellSet.of(partition, np.flatnonzero(mask))
