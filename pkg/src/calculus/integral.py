"""
integral.py

The pointwise integral ∮ u = Σ_a u(a) η_a, the pointwise scalar product and
its restrictions, and surface integrals against |Dθ°_A|.
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from calculus.basis import GammaBasis, UltraFun
from calculus.errors import IndefiniteFormError
from calculus.geometry import CellSet
from calculus.quadrature import QuadratureRule  # noqa: F401  re-exported

logger = logging.getLogger(__name__)


def sqint(u: UltraFun) -> float:
    """∮ u dx = Σ_{q∈Γ} u(q) η_q."""
    return float(u.values @ u.basis.eta)


def inner(u: UltraFun, v: UltraFun) -> float:
    """Pointwise scalar product Σ u(q) v(q) η_q (indefinite when some η_q ≤ 0)."""
    u._same_basis(v)
    return float((u.values * v.values) @ u.basis.eta)


def norm(u: UltraFun) -> float:
    """
    sqrt(inner(u, u)).

    Raises:
        IndefiniteFormError: If the self product is negative.
    """
    value = inner(u, u)
    if value < 0.0:
        logger.error(f"Negative self product {value:.3e}; the pointwise form is indefinite on this basis")
        raise IndefiniteFormError(f"inner(u, u) = {value:.3e} < 0")
    return float(np.sqrt(value))


def gamma_mask(basis: GammaBasis, E: CellSet) -> np.ndarray:
    """Γ points whose owning cell belongs to E (the set E_Γ)."""
    return np.isin(basis.owners, sorted(E.cells))


def sqint_over(u: UltraFun, E: CellSet) -> float:
    """Σ_{a ∈ E_Γ} u(a) η_a."""
    mask = gamma_mask(u.basis, E)
    return float(u.values[mask] @ u.basis.eta[mask])


def exact_integral(u: UltraFun) -> float:
    """∫ u dx evaluated cell by cell from the modal coefficients."""
    total = 0.0
    for block, coefficients in zip(u.basis.blocks, u.modal()):
        total += float(block.space.moments(lambda p: np.ones(len(p))) @ coefficients)
    return total


def cell_integral(f: Callable[[np.ndarray], np.ndarray], u: UltraFun,
                  E: Optional[CellSet] = None, extra_order: int = 0) -> float:
    """∫_E f·u dx, exact for polynomial f (see LocalSpace.moments)."""
    total = 0.0
    for block, coefficients in zip(u.basis.blocks, u.modal()):
        if E is not None and block.cell_id not in E:
            continue
        total += float(block.space.moments(f, extra_order) @ coefficients)
    return total


def gradient_magnitude(theta: UltraFun, operators: Sequence) -> np.ndarray:
    """|Dθ| at every Γ point: Euclidean length of the generalized partials."""
    partials = np.stack([op.apply(theta).values for op in operators], axis=0)
    return np.sqrt((partials ** 2).sum(axis=0))


def surface_integral(v: UltraFun, theta: UltraFun, operators: Sequence) -> float:
    """
    ∮ v |Dθ°_A| dx = Σ_x v(x) |Dθ°_A(x)| η_x.

    Args:
        v: Integrand.
        theta: θ°_A, typically from basis.theta_projection.
        operators: One DerivOperator per axis.
    """
    v._same_basis(theta)
    return float((v.values * gradient_magnitude(theta, operators)) @ v.basis.eta)
