"""
localspace.py

Per-cell spaces V⁰(Q): tensor Legendre polynomials of degree ≤ k scaled to
the cell and multiplied by θ_Q, plus quartic bumps ζ_a for the seeds a ∈ Ξ(Q).

Products of basis functions are integrated with a split rule: the cell Gauss
rule handles polynomial × polynomial terms, a rule on each bump ball handles
every term that involves a bump, and the polynomial part of the ball rule is
subtracted again. Both rules are exact on the space, so the resulting Gram
matrices are exact up to rounding.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import legendre
from scipy.spatial import cKDTree

from calculus.errors import BasisError
from calculus.geometry import CellSet, Partition, density_many
from calculus.quadrature import QuadratureRule, adapt_order, axis_nodes

logger = logging.getLogger(__name__)

Kind = Union[str, int]   # "value" or the axis of a first derivative


def bump_profile(t) -> np.ndarray:
    """ρ(t) = (1 - t²)² on |t| ≤ 1, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) <= 1.0, (1.0 - t * t) ** 2, 0.0)


@dataclass(frozen=True, eq=False)
class SeedSet:
    """
    Seed points Ξ with their owning cells and the common bump radius.

    Attributes:
        points (np.ndarray): (n, d) seed coordinates, grouped by cell.
        owners (np.ndarray): (n,) owning cell id of each seed.
        radius (float): Bump radius r; the balls B_r(a) are pairwise disjoint.
    """
    points: np.ndarray
    owners: np.ndarray
    radius: float

    def __len__(self) -> int:
        return len(self.owners)

    def in_cell(self, cell_id: int) -> np.ndarray:
        return self.points[self.owners == cell_id]


def _seed_axis(m: int, degree: Optional[int], touches_lower: bool, touches_upper: bool) -> np.ndarray:
    """Seed positions along one axis as fractions of the cell width."""
    if degree is not None and m <= degree and (degree - m) % 2 == 0:
        nodes = axis_nodes(degree + 1, touches_lower, touches_upper)
        gaps = 0.5 * (nodes[1:] + nodes[:-1])
        first = (degree - m) // 2
        return 0.5 * (gaps[first:first + m] + 1.0)
    return (np.arange(m) + 0.5) / m


def make_seeds(partition: Partition, per_cell: int, degree: Optional[int] = None) -> SeedSet:
    """
    Place `per_cell` seeds in every cell on a tensor grid.

    `per_cell` must be m**d. Without `degree` the seeds of a cell sit at the
    local coordinates (j + 1/2)/m along each axis. With `degree` = k, m ≤ k
    and k - m even, they sit instead at the midpoints of the m central gaps
    between the k+1 candidate nodes of that axis, so the candidate grid of
    order k+1 stays clear of every bump. The radius is a third of the
    smallest of the pairwise seed distances and twice the seed-to-cell-
    boundary distances.

    Raises:
        BasisError: If `per_cell` is negative or not a perfect d-th power.

    Example:
        >>> seeds = make_seeds(build_partition(Domain((0.0,), (1.0,)), [2]), 1)
        >>> seeds.points.ravel().tolist(), seeds.radius   # [0.25, 0.75], 1/6
    """
    d = partition.dimension
    if per_cell < 0:
        raise BasisError(f"Seed count must be non-negative, got {per_cell}")
    if per_cell == 0:
        return SeedSet(np.zeros((0, d)), np.zeros(0, dtype=int), 0.0)
    m = int(round(per_cell ** (1.0 / d)))
    if m ** d != per_cell:
        raise BasisError(f"Seeds per cell must be a perfect power m**{d}, got {per_cell}")

    points, owners, margins = [], [], []
    for cell in partition.cells:
        axes = [_seed_axis(m, degree, lo, hi) for lo, hi in partition.boundary_sides(cell.id)]
        offsets = np.array(list(itertools.product(*axes)))
        local = cell.lower + offsets * cell.width
        points.append(local)
        owners.extend([cell.id] * len(local))
        margins.append(np.minimum(local - cell.lower, cell.upper - local).min(axis=1))
    points = np.vstack(points)
    owners = np.asarray(owners, dtype=int)

    spacing = 2.0 * float(np.min(np.concatenate(margins)))
    if len(points) > 1:
        distances, _ = cKDTree(points).query(points, k=2)
        spacing = min(spacing, float(distances[:, 1].min()))
    radius = spacing / 3.0
    logger.info(f"Placed {len(points)} seeds ({per_cell} per cell), bump radius {radius:.6g}")
    return SeedSet(points, owners, radius)


def local_dim(degree: int, dimension: int, seeds_in_cell: int) -> int:
    """(k+1)^d + |Ξ(Q)|."""
    if degree < 1:
        raise BasisError(f"Polynomial degree must be at least 1, got {degree}")
    return (degree + 1) ** dimension + seeds_in_cell


class LocalSpace:
    """
    The local space V⁰(Q) of one cell.

    Columns are ordered polynomials first (multi-indices in C order), then
    bumps in seed order.
    """

    def __init__(self, partition: Partition, cell_id: int, degree: int,
                 seeds: Optional[np.ndarray] = None, radius: float = 0.0,
                 quadrature_tol: float = 1e-13):
        self.partition = partition
        self.cell = partition.cell(cell_id)
        self.degree = int(degree)
        self.dimension = partition.dimension
        self.seeds = np.zeros((0, self.dimension)) if seeds is None else np.asarray(seeds, dtype=float)
        self.radius = float(radius)
        self.quadrature_tol = quadrature_tol
        self.multi_indices: List[Tuple[int, ...]] = list(itertools.product(range(self.degree + 1), repeat=self.dimension))
        self.n_poly = len(self.multi_indices)
        self.dim = local_dim(self.degree, self.dimension, len(self.seeds))
        self.poly_mask = np.arange(self.dim) < self.n_poly
        self._scale = 2.0 / self.cell.width
        derivative = np.zeros((self.degree + 1, self.degree + 1))
        for j in range(1, self.degree + 1):
            unit = np.zeros(j + 1)
            unit[j] = 1.0
            coefficients = legendre.legder(unit)
            derivative[:len(coefficients), j] = coefficients
        self._derivative = derivative

    @property
    def cell_id(self) -> int:
        return self.cell.id

    @property
    def n_seeds(self) -> int:
        return len(self.seeds)

    def smooth_mask(self, smooth_degree: int) -> np.ndarray:
        """Columns spanning V¹(Q): bumps and polynomials with every α_i ≤ smooth_degree."""
        poly = [max(alpha) <= smooth_degree for alpha in self.multi_indices]
        return np.concatenate([np.asarray(poly, dtype=bool), np.ones(self.n_seeds, dtype=bool)])

    def reference(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.cell.center) * self._scale

    def values(self, points: np.ndarray) -> np.ndarray:
        """Raw basis values (polynomials extended past the cell, no θ factor), shape (m, dim)."""
        xi = self.reference(points)
        tables = [legendre.legvander(xi[:, a], self.degree) for a in range(self.dimension)]
        poly = np.ones((len(xi), self.n_poly))
        for col, alpha in enumerate(self.multi_indices):
            for a, order in enumerate(alpha):
                poly[:, col] *= tables[a][:, order]
        return np.hstack([poly, self._bump_values(np.atleast_2d(points))])

    def derivatives(self, points: np.ndarray, axis: int) -> np.ndarray:
        """Raw ∂/∂x_axis of every basis function, shape (m, dim)."""
        xi = self.reference(points)
        tables = []
        for a in range(self.dimension):
            table = legendre.legvander(xi[:, a], self.degree)
            tables.append(table @ self._derivative * self._scale[a] if a == axis else table)
        poly = np.ones((len(xi), self.n_poly))
        for col, alpha in enumerate(self.multi_indices):
            for a, order in enumerate(alpha):
                poly[:, col] *= tables[a][:, order]
        return np.hstack([poly, self._bump_derivatives(np.atleast_2d(points), axis)])

    def _bump_values(self, points: np.ndarray) -> np.ndarray:
        if not self.n_seeds:
            return np.zeros((len(points), 0))
        q = ((points[:, None, :] - self.seeds[None, :, :]) ** 2).sum(axis=2) / self.radius ** 2
        return np.where(q <= 1.0, (1.0 - q) ** 2, 0.0)

    def _bump_derivatives(self, points: np.ndarray, axis: int) -> np.ndarray:
        if not self.n_seeds:
            return np.zeros((len(points), 0))
        diff = points[:, None, :] - self.seeds[None, :, :]
        q = (diff ** 2).sum(axis=2) / self.radius ** 2
        return np.where(q <= 1.0, -4.0 * (1.0 - q) * diff[:, :, axis] / self.radius ** 2, 0.0)

    def theta(self, points: np.ndarray) -> np.ndarray:
        """θ_Q at the given points: 1 inside, 0 outside the closure, fractions on ∂Q."""
        return density_many(self.partition, CellSet.of(self.partition, [self.cell_id]), points)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Basis values including the θ_Q factor, shape (m, dim)."""
        points = np.atleast_2d(points)
        return self.values(points) * self.theta(points)[:, None]

    def table(self, points: np.ndarray, kind: Kind) -> np.ndarray:
        return self.values(points) if kind == "value" else self.derivatives(points, int(kind))

    @cached_property
    def cell_rule(self) -> QuadratureRule:
        return QuadratureRule.box(self.cell.lower, self.cell.upper, self.degree + 2)

    def bump_rule_of_order(self, order: int) -> QuadratureRule:
        return QuadratureRule.concatenate(
            [QuadratureRule.ball(s, self.radius, order) for s in self.seeds], self.dimension)

    @cached_property
    def bump_order(self) -> int:
        if not self.n_seeds:
            return 0
        start = max(5, self.degree + 3)
        order, _ = adapt_order(lambda n: self._product(self.bump_rule_of_order(n), "value", "value"),
                               start, self.quadrature_tol)
        return order

    @cached_property
    def bump_rule(self) -> QuadratureRule:
        if not self.n_seeds:
            return QuadratureRule.empty(self.dimension)
        return self.bump_rule_of_order(self.bump_order)

    def _product(self, bump_rule: QuadratureRule, left: Kind, right: Kind) -> np.ndarray:
        rule = self.cell_rule
        mask = self.poly_mask.astype(float)
        fa = self.table(rule.points, left) * mask
        ga = self.table(rule.points, right) * mask
        result = fa.T @ (rule.weights[:, None] * ga)
        if len(bump_rule):
            fb = self.table(bump_rule.points, left)
            gb = self.table(bump_rule.points, right)
            wb = bump_rule.weights[:, None]
            result += fb.T @ (wb * gb) - (fb * mask).T @ (wb * (gb * mask))
        return result

    def product_matrix(self, left: Kind = "value", right: Kind = "value") -> np.ndarray:
        """
        Exact ∫_Q f_i g_j for f, g the basis functions or their derivatives.

        Args:
            left: "value" or an axis index for ∂/∂x_axis of the row functions.
            right: Same for the column functions.

        Returns:
            np.ndarray: (dim, dim) matrix with rows indexed by `left`.
        """
        return self._product(self.bump_rule, left, right)

    @cached_property
    def gram(self) -> np.ndarray:
        return self.product_matrix("value", "value")

    def moments(self, func: Callable[[np.ndarray], np.ndarray], extra_order: int = 0) -> np.ndarray:
        """
        ∫_Q func·φ_j for every basis function, exact when func is a polynomial
        whose per-axis degree is at most degree + 3 + 2·extra_order.
        """
        cell_rule = self.cell_rule if not extra_order else QuadratureRule.box(
            self.cell.lower, self.cell.upper, self.degree + 2 + extra_order)
        mask = self.poly_mask.astype(float)
        result = (cell_rule.weights * np.asarray(func(cell_rule.points), dtype=float)) @ (self.values(cell_rule.points) * mask)
        if self.n_seeds:
            bump_rule = self.bump_rule if not extra_order else self.bump_rule_of_order(self.bump_order + extra_order)
            fb = bump_rule.weights * np.asarray(func(bump_rule.points), dtype=float)
            table = self.values(bump_rule.points)
            result = result + fb @ table - fb @ (table * mask)
        return result


def build_local_spaces(partition: Partition, degree: int, seeds: Optional[SeedSet] = None,
                       quadrature_tol: float = 1e-13) -> List[LocalSpace]:
    """One LocalSpace per cell, in cell id order."""
    spaces = []
    for cell in partition.cells:
        local = seeds.in_cell(cell.id) if seeds is not None else None
        radius = seeds.radius if seeds is not None else 0.0
        spaces.append(LocalSpace(partition, cell.id, degree, local, radius, quadrature_tol))
    return spaces


def eval_local(space: LocalSpace, coefficients, x) -> float:
    """Value of Σ c_j φ_j at x, θ_Q-weighted (1 inside, 1/2 on any facet, 1/4 at a square corner, 0 outside)."""
    row = space.evaluate(np.asarray(x, dtype=float).reshape(1, -1))[0]
    return float(row @ np.asarray(coefficients, dtype=float))
