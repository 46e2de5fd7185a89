"""
basis.py

Construction of the point set Γ, the σ-basis and δ-basis of the ultrafunction
space, and the canonical extension (projection) of ordinary functions.

Per cell Q the Γ-block holds the seeds of Q followed by extra points chosen
from a tensor candidate grid. σ_a is the member of V(Q) with σ_a(b) = δ_ab,
η_a = ∫σ_a and δ_a = σ_a/η_a. An ultrafunction is stored as its value vector
on Γ, u = Σ_a u(a) σ_a.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse as sp

from calculus.errors import BasisError, ProjectionError
from calculus.geometry import CellSet, Partition, density_many
from calculus.localspace import LocalSpace, SeedSet
from calculus.quadrature import axis_nodes

logger = logging.getLogger(__name__)

Evaluable = Callable[[np.ndarray], np.ndarray]


@dataclass(eq=False)
class CellBlock:
    """
    Γ-block of one cell with its change-of-basis tables.

    Attributes:
        space: The local space V(Q).
        start, stop: Position of the block inside Γ.
        points: (n, d) Γ points of the cell, seeds first.
        is_seed: Flags for the seed points.
        evaluation: E[p, j] = φ_j(γ_p).
        kernel: Modal coefficients of the dual functions 𝔡_b (columns).
        sigma: Modal coefficients of σ_a (columns).
        eta: η_a = ∫σ_a.
    """
    space: LocalSpace
    start: int
    stop: int
    points: np.ndarray
    is_seed: np.ndarray
    evaluation: np.ndarray
    kernel: np.ndarray
    sigma: np.ndarray
    eta: np.ndarray
    condition: float

    @property
    def cell_id(self) -> int:
        return self.space.cell_id

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)

    @property
    def gram(self) -> np.ndarray:
        return self.space.gram

    @cached_property
    def delta(self) -> np.ndarray:
        return self.sigma / self.eta[None, :]

    @cached_property
    def nodal_gram(self) -> np.ndarray:
        """Plain ∫ product of the σ_a of this cell."""
        return self.sigma.T @ self.gram @ self.sigma

    def duality(self) -> np.ndarray:
        """[∫ σ_a 𝔡_b]; the identity matrix by construction."""
        return self.kernel.T @ self.gram @ self.sigma


class GammaBasis:
    """
    Γ together with the σ/δ tables of every cell.

    Attributes:
        partition (Partition): The underlying partition.
        blocks (list[CellBlock]): One block per cell, in cell id order.
        points (np.ndarray): (N, d) Γ points.
        owners (np.ndarray): (N,) owning cell of each Γ point.
        eta (np.ndarray): (N,) weights η_a.
    """

    def __init__(self, partition: Partition, blocks: List[CellBlock], seeds: Optional[SeedSet] = None):
        self.partition = partition
        self.blocks = blocks
        self.seeds = seeds
        self.points = np.vstack([b.points for b in blocks])
        self.owners = np.concatenate([np.full(len(b.points), b.cell_id) for b in blocks])
        self.eta = np.concatenate([b.eta for b in blocks])
        self.is_seed = np.concatenate([b.is_seed for b in blocks])
        self.nonpositive_eta = np.flatnonzero(self.eta <= 0.0)
        if self.nonpositive_eta.size:
            logger.warning(f"{self.nonpositive_eta.size} Γ points have η ≤ 0 (min η = {self.eta.min():.3e})")

    @property
    def size(self) -> int:
        return len(self.eta)

    @property
    def dimension(self) -> int:
        return self.partition.dimension

    @property
    def degree(self) -> int:
        return self.blocks[0].space.degree

    def block(self, cell_id: int) -> CellBlock:
        return self.blocks[cell_id]

    def zeros(self) -> "UltraFun":
        return UltraFun(self, np.zeros(self.size))

    def function(self, values) -> "UltraFun":
        return UltraFun(self, np.asarray(values, dtype=float).copy())

    def index_of(self, point) -> int:
        """Position of a Γ point, or BasisError if the point is not in Γ."""
        point = np.asarray(point, dtype=float).reshape(1, -1)
        scale = self.partition.domain.extent
        hits = np.flatnonzero(np.all(np.abs(self.points - point) <= 1e-12 * scale, axis=1))
        if not hits.size:
            raise BasisError(f"Point {point.ravel().tolist()} is not a Γ point")
        return int(hits[0])

    def modal(self, values: np.ndarray) -> List[np.ndarray]:
        """Per-cell modal coefficients of the member with the given Γ values."""
        return [b.sigma @ values[b.slice] for b in self.blocks]

    @cached_property
    def nodal_gram(self) -> sp.csr_matrix:
        """Block-diagonal plain product ∫ σ_a σ_b."""
        return sp.block_diag([b.nodal_gram for b in self.blocks], format="csr")

    def summary(self) -> Dict[str, float]:
        return {
            "gamma_size": int(self.size),
            "cells": len(self.blocks),
            "degree": int(self.degree),
            "seeds": int(self.is_seed.sum()),
            "eta_min": float(self.eta.min()),
            "eta_max": float(self.eta.max()),
            "eta_sum": float(self.eta.sum()),
            "nonpositive_eta": int(self.nonpositive_eta.size),
            "max_gram_condition": float(max(b.condition for b in self.blocks)),
        }


@dataclass(frozen=True, eq=False)
class UltraFun:
    """An ultrafunction as its value vector on Γ."""
    basis: GammaBasis
    values: np.ndarray

    def __post_init__(self):
        if np.shape(self.values) != (self.basis.size,):
            raise BasisError(f"Expected {self.basis.size} Γ values, got shape {np.shape(self.values)}")

    def _same_basis(self, other: "UltraFun") -> None:
        if other.basis is not self.basis:
            raise BasisError("Ultrafunctions live on different bases")

    def __add__(self, other: "UltraFun") -> "UltraFun":
        self._same_basis(other)
        return UltraFun(self.basis, self.values + other.values)

    def __sub__(self, other: "UltraFun") -> "UltraFun":
        self._same_basis(other)
        return UltraFun(self.basis, self.values - other.values)

    def __neg__(self) -> "UltraFun":
        return UltraFun(self.basis, -self.values)

    def __mul__(self, other: Union["UltraFun", float]) -> "UltraFun":
        # Γ-pointwise product: the projection of the ordinary product.
        if isinstance(other, UltraFun):
            self._same_basis(other)
            return UltraFun(self.basis, self.values * other.values)
        return UltraFun(self.basis, self.values * float(other))

    __rmul__ = __mul__

    def modal(self) -> List[np.ndarray]:
        return self.basis.modal(self.values)


def candidate_points(space: LocalSpace, order: Optional[int] = None) -> np.ndarray:
    """Tensor candidate grid of a cell, of order k+1 unless `order` is given."""
    order = space.degree + 1 if order is None else order
    sides = space.partition.boundary_sides(space.cell_id)
    axes = [axis_nodes(order, lo, hi) for lo, hi in sides]
    grids = np.meshgrid(*axes, indexing="ij")
    xi = np.stack([g.ravel() for g in grids], axis=1)
    return space.cell.center + 0.5 * xi * space.cell.width


def extra_candidates(space: LocalSpace) -> np.ndarray:
    """
    Candidates for the extra points of a cell.

    The k+1 grid is used whenever it misses every bump ball, which makes the
    extras exactly that grid; otherwise the k+2 grid goes to the selection.
    """
    grid = candidate_points(space)
    if not space.n_seeds:
        return grid
    gaps = np.linalg.norm(grid[:, None, :] - space.seeds[None, :, :], axis=2)
    if gaps.min() >= space.radius:
        return grid
    logger.debug(f"Cell {space.cell_id}: candidate grid meets a bump, widening to order {space.degree + 2}")
    return candidate_points(space, space.degree + 2)


def select_extra_points(space: LocalSpace, candidates: np.ndarray, pivot_tol: float) -> np.ndarray:
    """
    Pick (k+1)^d extra points by greedy maximum pivoting.

    Each candidate row is the polynomial evaluation vector with the seed rows
    eliminated, e(c) - Σ_s ζ_s(c) e(s); the full evaluation matrix on
    seeds + extras is nonsingular exactly when the chosen reduced rows are.

    Raises:
        BasisError: If no selection reaches the relative pivot threshold.
    """
    n_poly = space.n_poly
    if not space.n_seeds:
        if len(candidates) != n_poly:
            raise BasisError(f"Cell {space.cell_id}: {len(candidates)} candidates for {n_poly} extra points")
        return candidates
    cand = space.values(candidates)
    seed_rows = space.values(space.seeds)
    reduced = cand[:, :n_poly] - cand[:, n_poly:] @ seed_rows[:, :n_poly]
    _, r, pivots = scipy.linalg.qr(reduced.T, mode="economic", pivoting=True)
    pivots_abs = np.abs(np.diag(r))
    if len(pivots_abs) < n_poly or pivots_abs[n_poly - 1] <= pivot_tol * pivots_abs[0]:
        logger.error(f"Extra-point selection failed in cell {space.cell_id}")
        raise BasisError(f"Cell {space.cell_id}: no candidate subset with pivot above {pivot_tol:g}")
    chosen = np.sort(pivots[:n_poly])
    return candidates[chosen]


def build_gamma(partition: Partition, spaces: Sequence[LocalSpace], seeds: Optional[SeedSet] = None,
                pivot_tol: float = 1e-8, condition_limit: float = 1e12) -> GammaBasis:
    """
    Build Γ and the σ/δ tables.

    Per cell: check the Gram conditioning, select the extra points, form the
    dual kernel 𝔡_b (the reproducing kernel of V(Q) under ∫), solve the
    duality system ∫ σ_a 𝔡_b = δ_ab and integrate σ_a to get η_a.

    Args:
        partition (Partition): The partition.
        spaces (Sequence[LocalSpace]): Local spaces in cell id order.
        seeds (SeedSet, optional): Seeds used by the spaces.
        pivot_tol (float): Relative pivot threshold of the point selection.
        condition_limit (float): Largest accepted Gram condition number.

    Returns:
        GammaBasis

    Raises:
        BasisError: On a failed selection or an ill-conditioned Gram matrix.
    """
    blocks = []
    start = 0
    for space in spaces:
        gram = space.gram
        condition = float(np.linalg.cond(gram))
        if not np.isfinite(condition) or condition > condition_limit:
            logger.error(f"Gram matrix of cell {space.cell_id} has condition {condition:.3e}")
            raise BasisError(f"Cell {space.cell_id}: Gram condition {condition:.3e} exceeds {condition_limit:.1e}")

        extras = select_extra_points(space, extra_candidates(space), pivot_tol)
        points = np.vstack([space.seeds, extras])
        is_seed = np.arange(len(points)) < space.n_seeds
        evaluation = space.values(points)
        kernel = scipy.linalg.solve(gram, evaluation.T, assume_a="sym")
        sigma = scipy.linalg.solve(kernel.T @ gram, np.eye(space.dim))
        eta = sigma.T @ space.moments(lambda p: np.ones(len(p)))
        if np.any(eta == 0.0):
            raise BasisError(f"Cell {space.cell_id}: a σ-basis function has zero integral")
        blocks.append(CellBlock(space, start, start + space.dim, points, is_seed, evaluation,
                                kernel, sigma, eta, condition))
        start += space.dim

    basis = GammaBasis(partition, blocks, seeds)
    logger.info(f"Built Γ with {basis.size} points on {len(blocks)} cells, Σ η = {basis.eta.sum():.12g}")
    return basis


def _undefined_mask(basis: GammaBasis, undefined) -> np.ndarray:
    if undefined is None:
        return np.zeros(basis.size, dtype=bool)
    if callable(undefined):
        return np.asarray(undefined(basis.points), dtype=bool)
    marks = np.atleast_2d(np.asarray(undefined, dtype=float))
    scale = 1e-12 * basis.partition.domain.extent
    return np.any(np.all(np.abs(basis.points[:, None, :] - marks[None, :, :]) <= scale, axis=2), axis=1)


def project(basis: GammaBasis, g: Evaluable, undefined=None) -> UltraFun:
    """
    Canonical extension g° = Σ_a g(a) σ_a.

    Args:
        basis: The Γ basis.
        g: Vectorized function of an (m, d) point array.
        undefined: Points (array) or predicate where g is declared undefined;
            the value there is 0.

    Raises:
        ProjectionError: If g fails or is not finite at another Γ point.
    """
    mask = _undefined_mask(basis, undefined)
    values = np.zeros(basis.size)
    points = basis.points[~mask]
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            evaluated = np.broadcast_to(np.asarray(g(points), dtype=float), (len(points),))
    except Exception as e:
        logger.error(f"Projection failed: {str(e)}")
        raise ProjectionError(f"Function could not be evaluated on Γ: {str(e)}") from e
    bad = np.flatnonzero(~np.isfinite(evaluated))
    if bad.size:
        logger.error(f"Projected function not finite at {bad.size} Γ points")
        raise ProjectionError(f"Function is not finite at Γ point {points[bad[0]].tolist()}")
    values[~mask] = evaluated
    return UltraFun(basis, values)


def evaluate(u: UltraFun, x) -> float:
    """
    u(x) = Σ_a u(a) σ_a(x), with each cell's σ_a carrying its factor θ_Q(x).

    On a shared facet the cells contribute half each. On ∂Ω the small ball
    sticks out of Ω, so the value there is the trace times 1/2 on a side and
    1/4 at a corner of a square.
    """
    basis = u.basis
    value = 0.0
    for cell_id, fraction in basis.partition.locate(x):
        block = basis.block(cell_id)
        row = block.space.values(np.asarray(x, dtype=float).reshape(1, -1))[0]
        value += fraction * float(row @ (block.sigma @ u.values[block.slice]))
    return value


def evaluate_many(u: UltraFun, points: np.ndarray) -> np.ndarray:
    return np.array([evaluate(u, x) for x in np.atleast_2d(points)])


def delta_at(basis: GammaBasis, q) -> UltraFun:
    """δ_q for q ∈ Γ, with ∮ v δ_q = v(q); values 1/η_q at q, 0 elsewhere."""
    index = basis.index_of(q)
    values = np.zeros(basis.size)
    values[index] = 1.0 / basis.eta[index]
    return UltraFun(basis, values)


def sigma_at(basis: GammaBasis, index: int) -> UltraFun:
    values = np.zeros(basis.size)
    values[index] = 1.0
    return UltraFun(basis, values)


def theta_projection(basis: GammaBasis, E: CellSet) -> UltraFun:
    """
    θ°_E: density values of E at the Γ points.

    Γ points on ∂Ω carry cell traces, so they take the density relative to Ω;
    there θ°_Ω is 1 like everywhere else.
    """
    partition = basis.partition
    values = density_many(partition, E, basis.points)
    on_boundary = np.array([partition.domain.on_boundary(x) for x in basis.points], dtype=bool)
    if on_boundary.any():
        values[on_boundary] = density_many(partition, E, basis.points[on_boundary], clipped=True)
    return UltraFun(basis, values)


def indicator_projection(basis: GammaBasis, E: CellSet, closed: bool = False) -> UltraFun:
    """χ°_E (Γ points strictly inside E) or χ°_Ē (Γ points in the closure of E)."""
    values = np.zeros(basis.size)
    for i, x in enumerate(basis.points):
        located = basis.partition.locate(x)
        if closed:
            values[i] = float(any(cid in E for cid, _ in located))
        else:
            values[i] = float(all(cid in E for cid, _ in located) and not basis.partition.domain.on_boundary(x))
    return UltraFun(basis, values)


def to_frame(u: UltraFun) -> pd.DataFrame:
    """Γ coordinates, owning cell and value, in Γ order."""
    names = ["x", "y"][:u.basis.dimension]
    frame = pd.DataFrame(u.basis.points, columns=names)
    frame["cell"] = u.basis.owners
    frame["value"] = u.values
    return frame
