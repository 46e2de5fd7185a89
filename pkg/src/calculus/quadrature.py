"""
Quadrature rules used to manufacture exact integrals on the local spaces.

Three families live here:

- Gauss-Legendre tensor rules on axis-aligned boxes and facets.
- Ball rules on bump supports (Gauss on an interval in 1D, a polar
  Gauss-in-radius / trapezoid-in-angle rule in 2D). Bumps are polynomials in
  the Cartesian coordinates inside their ball, so both rules are exact once
  the order is high enough.
- Radau, Lobatto and near-Lobatto node sets, used only as candidate points
  for Γ.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial import legendre

logger = logging.getLogger(__name__)

MAX_ADAPT_ORDER = 64
# Weight of P_{n-2} in the node polynomial of interior axes (see near_lobatto_nodes).
LOBATTO_BLEND = 0.98


@dataclass(frozen=True)
class QuadratureRule:
    """
    Points and weights of a quadrature rule in physical coordinates.

    Attributes:
        points (np.ndarray): Array of shape (m, d).
        weights (np.ndarray): Array of shape (m,), all positive.
    """
    points: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum over the first axis of `values`."""
        return np.tensordot(self.weights, values, axes=(0, 0))

    @classmethod
    def empty(cls, dimension: int) -> "QuadratureRule":
        return cls(np.zeros((0, dimension)), np.zeros(0))

    @classmethod
    def concatenate(cls, rules, dimension: int) -> "QuadratureRule":
        rules = [r for r in rules if len(r)]
        if not rules:
            return cls.empty(dimension)
        return cls(np.vstack([r.points for r in rules]), np.concatenate([r.weights for r in rules]))

    @classmethod
    def box(cls, lower, upper, order: int) -> "QuadratureRule":
        """
        Tensor Gauss-Legendre rule with `order` points per axis on a box.

        A zero-width axis (a facet) contributes a single point of weight 1,
        so the same constructor serves cells and facets.

        Example:
            >>> rule = QuadratureRule.box([0.0], [1.0], 3)
            >>> float(rule.integrate(rule.points[:, 0] ** 4))  # 1/5
            0.2
        """
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        nodes, weights = legendre.leggauss(order)
        axis_points, axis_weights = [], []
        for lo, hi in zip(lower, upper):
            if hi - lo == 0.0:
                axis_points.append(np.array([lo]))
                axis_weights.append(np.array([1.0]))
            else:
                half = 0.5 * (hi - lo)
                axis_points.append(lo + half * (nodes + 1.0))
                axis_weights.append(half * weights)
        grids = np.meshgrid(*axis_points, indexing="ij")
        points = np.stack([g.ravel() for g in grids], axis=1)
        wgrids = np.meshgrid(*axis_weights, indexing="ij")
        w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        return cls(points, w)

    @classmethod
    def ball(cls, center, radius: float, order: int) -> "QuadratureRule":
        """Rule on the closed ball B_r(center); interval in 1D, polar in 2D."""
        center = np.asarray(center, dtype=float)
        dimension = center.shape[0]
        nodes, weights = legendre.leggauss(order)
        if dimension == 1:
            points = center[0] + radius * nodes
            return cls(points[:, None], radius * weights)
        if dimension != 2:
            raise ValueError(f"Ball rules exist for d in (1, 2), got d={dimension}")
        s = 0.5 * radius * (nodes + 1.0)
        ws = 0.5 * radius * weights * s
        n_angles = 2 * order + 2
        phi = 2.0 * np.pi * np.arange(n_angles) / n_angles
        ss, pp = np.meshgrid(s, phi, indexing="ij")
        points = np.stack([center[0] + ss.ravel() * np.cos(pp.ravel()),
                           center[1] + ss.ravel() * np.sin(pp.ravel())], axis=1)
        w = np.repeat(ws, n_angles) * (2.0 * np.pi / n_angles)
        return cls(points, w)


def near_lobatto_nodes(n: int, blend: float = LOBATTO_BLEND) -> np.ndarray:
    """
    Roots of P_n - blend·P_{n-2} on (-1, 1).

    blend = 0 gives the Gauss nodes and blend = 1 the Lobatto nodes. Every
    blend in [0, 1) keeps the interpolatory rule exact to degree 2n - 3 and
    all nodes inside the open interval; close to 1 the outer nodes sit next
    to the ends, so traces at ±1 are nearly convex combinations of values.

    Example:
        >>> near_lobatto_nodes(3, 0.98)   # ±√((3 + 2·0.98)/5) and 0
        array([-0.99599..., 0., 0.99599...])
    """
    if n < 1:
        raise ValueError(f"Need at least one node, got {n}")
    if not 0.0 <= blend < 1.0:
        raise ValueError(f"Blend must lie in [0, 1), got {blend}")
    if n == 1:
        return np.zeros(1)
    coefficients = np.zeros(n + 1)
    coefficients[n] = 1.0
    coefficients[n - 2] -= blend
    nodes = np.sort(np.real(legendre.legroots(coefficients)))
    nodes[np.abs(nodes) < 1e-15] = 0.0
    return nodes


def radau_nodes(n: int, side: str = "left") -> np.ndarray:
    """
    Gauss-Radau nodes on [-1, 1] with one node fixed at the given end.

    The n nodes are the roots of P_{n-1} + P_n (left) or their mirror image.
    """
    if n < 1:
        raise ValueError(f"Radau rule needs at least one node, got {n}")
    if n == 1:
        nodes = np.array([-1.0])
    else:
        coefficients = np.zeros(n + 1)
        coefficients[n - 1] = 1.0
        coefficients[n] = 1.0
        nodes = np.sort(np.real(legendre.legroots(coefficients)))
        nodes[0] = -1.0
    if side == "right":
        return -nodes[::-1]
    if side != "left":
        raise ValueError(f"Unknown Radau side: {side}")
    return nodes


def lobatto_nodes(n: int) -> np.ndarray:
    """Gauss-Lobatto nodes on [-1, 1]: both ends plus the roots of P'_{n-1}."""
    if n < 2:
        raise ValueError(f"Lobatto rule needs at least two nodes, got {n}")
    basis = np.zeros(n)
    basis[n - 1] = 1.0
    interior = np.sort(np.real(legendre.legroots(legendre.legder(basis)))) if n > 2 else np.zeros(0)
    return np.concatenate([[-1.0], interior, [1.0]])


def axis_nodes(n: int, touches_lower: bool, touches_upper: bool) -> np.ndarray:
    """Candidate nodes on [-1, 1] for one axis of a cell, given which sides lie on ∂Ω."""
    if touches_lower and touches_upper:
        return lobatto_nodes(max(n, 2))
    if touches_lower:
        return radau_nodes(n, "left")
    if touches_upper:
        return radau_nodes(n, "right")
    return near_lobatto_nodes(n)


def adapt_order(evaluate: Callable[[int], np.ndarray], start: int, tol: float,
                step: int = 2) -> Tuple[int, np.ndarray]:
    """
    Raise a quadrature order until two successive results agree.

    Args:
        evaluate: Maps an order to an array of integrals.
        start: First order tried.
        tol: Agreement threshold, relative to max(1, max|result|).
        step: Order increment.

    Returns:
        (order, result) for the first order whose result agrees with its
        predecessor.
    """
    order = start
    current = evaluate(order)
    while order + step <= MAX_ADAPT_ORDER:
        following = evaluate(order + step)
        scale = max(1.0, float(np.max(np.abs(following), initial=0.0)))
        if np.max(np.abs(following - current), initial=0.0) <= tol * scale:
            return order + step, following
        order += step
        current = following
    logger.warning(f"Quadrature order capped at {order} before reaching tolerance {tol:g}")
    return order, current
