"""
derivative.py

The generalized partial derivative D_i on Γ values.

The weak form on cellwise members is

    B_i(u, v) = Σ_Q ∫_Q ∂_i u_Q v_Q  -  ½ Σ_Q Σ_{f ⊂ ∂Q} ∫_f (u_Q - u_R) v_Q n_{Q,i} dS

with u_R the neighbor's trace, or the exterior state (0, or the interior trace
on natural sides). B_i is antisymmetric whenever no natural side is used.
On U¹ = ⊕ V¹(Q) the derivative is the strong form of B_i under the pointwise
product; on the complement U⁰ it is the negative adjoint of D_i P₁:

    H M = B P₁ - P₁ᵀ Bᵀ P₀,   H = diag(η),

which gives H M + Mᵀ H = P₁ᵀ (B + Bᵀ) P₁ = 0.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse as sp

from calculus.basis import GammaBasis, UltraFun, theta_projection
from calculus.errors import OperatorError
from calculus.geometry import EXTERIOR, CellSet, Partition
from calculus.integral import inner
from calculus.quadrature import QuadratureRule

logger = logging.getLogger(__name__)

Side = Tuple[int, str]


@dataclass(eq=False)
class SpaceSplit:
    """
    ∫-orthogonal splitting of V into U¹ = ⊕ V¹(Q) and its complement U⁰.

    `p1` acts on Γ values and is block diagonal by cell.
    """
    basis: GammaBasis
    smooth_degree: int
    p1: sp.csr_matrix

    @property
    def identity(self) -> bool:
        return self.smooth_degree >= self.basis.degree

    @property
    def p0(self) -> sp.csr_matrix:
        return sp.identity(self.basis.size, format="csr") - self.p1


def build_split(basis: GammaBasis, smooth_degree: Optional[int] = None) -> SpaceSplit:
    """
    Projector onto U¹, with V¹(Q) spanned by the bumps and the polynomials of
    per-axis degree ≤ smooth_degree (default: the full degree, so P₁ = I).
    """
    degree = basis.degree
    k1 = degree if smooth_degree is None else int(smooth_degree)
    if not 0 <= k1 <= degree:
        raise OperatorError(f"Smooth degree must lie in [0, {degree}], got {k1}")
    blocks = []
    for block in basis.blocks:
        mask = block.space.smooth_mask(k1)
        gram = block.gram
        modal = np.zeros_like(gram)
        modal[mask, :] = scipy.linalg.solve(gram[np.ix_(mask, mask)], gram[mask, :], assume_a="sym")
        blocks.append(block.evaluation @ modal @ block.sigma)
    return SpaceSplit(basis, k1, sp.block_diag(blocks, format="csr"))


@dataclass(eq=False)
class WeakForm:
    """
    B_i split into its volume part and per-facet interface triplets, so that
    facet weights can be changed without re-integrating.
    """
    basis: GammaBasis
    axis: int
    volume: sp.csr_matrix
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    facet_ids: np.ndarray
    natural_sides: Tuple[Side, ...] = ()

    def matrix(self, facet_weights: Optional[np.ndarray] = None) -> sp.csr_matrix:
        vals = self.vals if facet_weights is None else self.vals * np.asarray(facet_weights)[self.facet_ids]
        n = self.basis.size
        interface = sp.coo_matrix((vals, (self.rows, self.cols)), shape=(n, n)).tocsr()
        return (self.volume + interface).tocsr()


def _traces(basis: GammaBasis, cell_id: int, points: np.ndarray) -> np.ndarray:
    block = basis.block(cell_id)
    return block.space.values(points) @ block.sigma


def assemble_weak(basis: GammaBasis, axis: int, natural_sides: Sequence[Side] = ()) -> WeakForm:
    """
    Assemble the volume matrix and the interface triplets of B_axis.

    Rows index the test function v, columns the argument u.
    """
    partition = basis.partition
    if not 0 <= axis < partition.dimension:
        raise OperatorError(f"Axis {axis} out of range for d={partition.dimension}")
    natural = tuple(tuple(s) for s in natural_sides)

    volume = []
    for block in basis.blocks:
        stiffness = block.space.product_matrix(axis, "value")
        volume.append(block.sigma.T @ stiffness.T @ block.sigma)
    volume = sp.block_diag(volume, format="csr")

    rows, cols, vals, ids = [], [], [], []

    def add(row_cell, col_cell, matrix, facet_id):
        r = basis.block(row_cell).slice
        c = basis.block(col_cell).slice
        rr, cc = np.meshgrid(np.arange(r.start, r.stop), np.arange(c.start, c.stop), indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(matrix.ravel())
        ids.append(np.full(rr.size, facet_id))

    for facet in partition.facets:
        if facet.axis != axis:
            continue
        if facet.is_exterior and facet.side in natural:
            continue
        c = facet.normal[axis]
        rule = QuadratureRule.box(facet.lower, facet.upper, basis.degree + 2)
        w = rule.weights[:, None]
        t_q = _traces(basis, facet.cell, rule.points)
        add(facet.cell, facet.cell, -0.5 * c * t_q.T @ (w * t_q), facet.id)
        if facet.neighbor == EXTERIOR:
            continue
        t_r = _traces(basis, facet.neighbor, rule.points)
        add(facet.cell, facet.neighbor, 0.5 * c * t_q.T @ (w * t_r), facet.id)
        add(facet.neighbor, facet.neighbor, 0.5 * c * t_r.T @ (w * t_r), facet.id)
        add(facet.neighbor, facet.cell, -0.5 * c * t_r.T @ (w * t_q), facet.id)

    def stack(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    return WeakForm(basis, axis, volume, stack(rows, int), stack(cols, int), stack(vals, float),
                    stack(ids, int), natural)


@dataclass(eq=False)
class DerivOperator:
    """
    D_axis as a sparse |Γ|×|Γ| matrix `matrix` (M), with `weak` = H M.
    """
    basis: GammaBasis
    axis: int
    matrix: sp.csr_matrix
    weak: sp.csr_matrix
    natural_sides: Tuple[Side, ...] = ()
    facet_weights: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def apply(self, u: UltraFun) -> UltraFun:
        if u.basis is not self.basis:
            raise OperatorError("Operator and ultrafunction use different bases")
        return UltraFun(self.basis, self.matrix @ u.values)

    def to_triplets(self) -> pd.DataFrame:
        coo = self.matrix.tocoo()
        frame = pd.DataFrame({"row": coo.row, "col": coo.col, "value": coo.data})
        return frame.sort_values(["row", "col"], kind="mergesort").reset_index(drop=True)


def strong_form(basis: GammaBasis, weak_matrix: sp.csr_matrix) -> sp.csr_matrix:
    """M = H⁻¹ (H M)."""
    eta = basis.eta
    if np.any(eta == 0.0):
        zero = np.flatnonzero(eta == 0.0)
        logger.error(f"η vanishes at Γ points {zero.tolist()[:10]}")
        raise OperatorError(f"Pointwise Gram diag(η) is singular at {zero.size} Γ points")
    if basis.nonpositive_eta.size:
        logger.warning(f"Strong form uses {basis.nonpositive_eta.size} negative η weights")
    return (sp.diags(1.0 / eta) @ weak_matrix).tocsr()


def operator_from_weak(weak: WeakForm, split: SpaceSplit,
                       facet_weights: Optional[np.ndarray] = None) -> DerivOperator:
    b = weak.matrix(facet_weights)
    if split.identity:
        hm = b
    else:
        hm = (b @ split.p1 - split.p1.T @ b.T @ split.p0).tocsr()
    hm.eliminate_zeros()
    return DerivOperator(weak.basis, weak.axis, strong_form(weak.basis, hm), hm,
                         weak.natural_sides, facet_weights)


def assemble_D(partition: Partition, basis: GammaBasis, split: SpaceSplit, axis: int,
               natural_sides: Sequence[Side] = (),
               facet_weights: Optional[np.ndarray] = None) -> DerivOperator:
    """
    Assemble the generalized partial derivative along `axis`.

    Args:
        partition: Must be the basis partition.
        basis: The Γ basis.
        split: Splitting V = U¹ ⊕ U⁰.
        axis: Direction i.
        natural_sides: Domain sides, as (axis, "lower" | "upper"), whose
            exterior state is the interior trace instead of 0.
        facet_weights: Optional multiplier per facet id for the interface terms.

    Returns:
        DerivOperator

    Raises:
        OperatorError: If the partition does not match or η has zeros.
    """
    if partition is not basis.partition:
        raise OperatorError("Basis was built on a different partition")
    operator = operator_from_weak(assemble_weak(basis, axis, natural_sides), split, facet_weights)
    logger.info(f"Assembled D_{axis}: |Γ|={basis.size} nnz={operator.nnz}")
    return operator


def assemble_all(basis: GammaBasis, split: Optional[SpaceSplit] = None,
                 natural_sides: Sequence[Side] = ()) -> Tuple[DerivOperator, ...]:
    split = split or build_split(basis)
    return tuple(assemble_D(basis.partition, basis, split, i, natural_sides) for i in range(basis.dimension))


def apply(operator: DerivOperator, u: UltraFun) -> UltraFun:
    return operator.apply(u)


def divergence(operators: Sequence[DerivOperator], phi: Sequence[UltraFun]) -> UltraFun:
    """Σ_i D_i φ_i."""
    if len(operators) != len(phi):
        raise OperatorError(f"Divergence needs {len(operators)} components, got {len(phi)}")
    result = phi[0].basis.zeros()
    for op, component in zip(operators, phi):
        result = result + op.apply(component)
    return result


def laplacian(operators: Sequence[DerivOperator], u: UltraFun) -> UltraFun:
    """Σ_i D_i D_i u."""
    result = u.basis.zeros()
    for op in operators:
        result = result + op.apply(op.apply(u))
    return result


def theta_derivative_pairing(E: CellSet, v: UltraFun, operator: DerivOperator) -> float:
    """∮ D_i θ°_E v dx."""
    return inner(operator.apply(theta_projection(v.basis, E)), v)


def boundary_flux(E: CellSet, v: UltraFun, axis: int,
                  weight: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  natural_sides: Sequence[Side] = ()) -> float:
    """
    -∫_{∂E} w {v} n_{E,axis} dS by facet quadrature.

    {v} is the average of the traces on both sides of the facet, the exterior
    trace being 0, which is what the pairing of D_axis with θ°_E reproduces.
    A natural side carries no jump of θ°_E and contributes nothing.
    """
    basis = v.basis
    natural = tuple(tuple(s) for s in natural_sides)
    total = 0.0
    for facet in basis.partition.facets:
        if facet.axis != axis:
            continue
        owner_in = facet.cell in E
        neighbor_in = facet.neighbor != EXTERIOR and facet.neighbor in E
        if owner_in == neighbor_in:
            continue
        inside = facet.cell if owner_in else facet.neighbor
        outside = facet.neighbor if owner_in else facet.cell
        rule = QuadratureRule.box(facet.lower, facet.upper, basis.degree + 2)
        v_in = _traces(basis, inside, rule.points) @ v.values[basis.block(inside).slice]
        if outside == EXTERIOR:
            if facet.side in natural:
                continue
            v_out = np.zeros_like(v_in)
        else:
            v_out = _traces(basis, outside, rule.points) @ v.values[basis.block(outside).slice]
        w = np.ones(len(rule)) if weight is None else np.asarray(weight(rule.points), dtype=float)
        n = facet.normal_from(inside)[axis]
        total -= float(rule.integrate(w * 0.5 * (v_in + v_out))) * n
    return total
