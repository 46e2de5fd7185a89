"""
gauss.py

Generalized perimeter p(A) = ∮ |Dθ°_A|, the normal field n°_A and the Gauss
divergence identity

    ∮ (D·φ) θ°_A dx = ∮_{∂A} φ·n°_A dS,   ∮_{∂A} g dS := ∮ g |Dθ°_A| dx,

for arbitrary (rasterized) regions A, plus the disk and Koch regions used by
the refinement experiments.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from calculus.basis import GammaBasis, UltraFun, project, theta_projection
from calculus.derivative import DerivOperator
from calculus.geometry import CellSet, Partition, rasterize
from calculus.integral import gradient_magnitude, inner, surface_integral
from calculus.level import build_level, refinement_levels

logger = logging.getLogger(__name__)

NORMAL_ZERO = 1e-14


@dataclass
class RegionMeasureReport:
    """Perimeter and Gauss residual of one region at one level, with the per-level history."""
    region: str
    level: int
    gamma_size: int
    perimeter: float
    lhs: float
    rhs: float
    residual: float
    history: List[Dict[str, float]] = field(default_factory=list)

    def passed(self, tol: float) -> bool:
        return self.residual <= tol * (1.0 + abs(self.lhs))

    def to_dict(self) -> dict:
        return {"region": self.region, "level": self.level, "gamma_size": self.gamma_size,
                "perimeter": self.perimeter, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "history": list(self.history)}


def perimeter(A: CellSet, operators: Sequence[DerivOperator], basis: GammaBasis) -> float:
    """p(A) = Σ_Γ |Dθ°_A(x)| η_x."""
    theta = theta_projection(basis, A)
    return surface_integral(project(basis, lambda p: np.ones(len(p))), theta, operators)


def normal_field(A: CellSet, operators: Sequence[DerivOperator], basis: GammaBasis,
                 zero_tol: float = NORMAL_ZERO) -> Tuple[UltraFun, ...]:
    """n°_A = -Dθ°_A / |Dθ°_A| where |Dθ°_A| > zero_tol, 0 elsewhere."""
    theta = theta_projection(basis, A)
    partials = [op.apply(theta).values for op in operators]
    magnitude = gradient_magnitude(theta, operators)
    keep = magnitude > zero_tol
    safe = np.where(keep, magnitude, 1.0)
    return tuple(UltraFun(basis, np.where(keep, -p / safe, 0.0)) for p in partials)


def gauss_check(phi: Sequence[UltraFun], A: CellSet, operators: Sequence[DerivOperator],
                basis: GammaBasis, region: str = "cells", zero_tol: float = NORMAL_ZERO) -> RegionMeasureReport:
    """
    Both sides of ∮ (D·φ) θ°_A = ∮_{∂A} φ·n°_A dS and their difference.
    """
    theta = theta_projection(basis, A)
    lhs = sum(inner(op.apply(component), theta) for op, component in zip(operators, phi))
    normals = normal_field(A, operators, basis, zero_tol)
    magnitude = gradient_magnitude(theta, operators)
    flux = sum(component.values * n.values for component, n in zip(phi, normals))
    rhs = float((flux * magnitude) @ basis.eta)
    p = float(magnitude @ basis.eta)
    return RegionMeasureReport(region, basis.partition.level, basis.size, p, float(lhs), rhs, abs(lhs - rhs))


def disk_region(partition: Partition, center=(0.5, 0.5), radius: float = 0.3) -> CellSet:
    center = np.asarray(center, dtype=float)
    return rasterize(partition, lambda c: np.linalg.norm(c - center, axis=1) < radius)


def koch_polyline(depth: int, base: float = 0.35, start: float = 0.0, stop: float = 1.0) -> np.ndarray:
    """
    Vertices of the Koch curve of the given depth over [start, stop] at height `base`,
    bumps pointing up.
    """
    points = np.array([[start, base], [stop, base]])
    rotation = np.array([[0.5, -np.sqrt(3.0) / 2.0], [np.sqrt(3.0) / 2.0, 0.5]])
    for _ in range(depth):
        refined = [points[0]]
        for p, q in zip(points[:-1], points[1:]):
            a = p + (q - p) / 3.0
            b = p + 2.0 * (q - p) / 3.0
            peak = a + rotation @ (b - a)
            refined.extend([a, peak, b, q])
        points = np.array(refined)
    return points


def polygon_contains(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd ray casting, vectorized over the query points."""
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x1, y1 = polygon[:, 0][None, :], polygon[:, 1][None, :]
    x2, y2 = np.roll(polygon[:, 0], -1)[None, :], np.roll(polygon[:, 1], -1)[None, :]
    straddles = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        crossing = x < (x2 - x1) * (y - y1) / (y2 - y1) + x1
    return np.logical_and(straddles, crossing).sum(axis=1) % 2 == 1


def koch_region(partition: Partition, depth: int, base: float = 0.35) -> CellSet:
    """Cells whose centers lie below the Koch curve of the given depth."""
    lower = partition.domain.lower
    upper = partition.domain.upper
    curve = koch_polyline(depth, base=lower[1] + base * (upper[1] - lower[1]), start=lower[0], stop=upper[0])
    polygon = np.vstack([curve, [[upper[0], lower[1]], [lower[0], lower[1]]]])
    return rasterize(partition, lambda c: polygon_contains(c, polygon))


def coordinate_field(basis: GammaBasis) -> Tuple[UltraFun, ...]:
    """(x°, y°): the projected identity field."""
    return tuple(project(basis, lambda p, a=a: p[:, a]) for a in range(basis.dimension))


def perimeter_study(partition: Partition, region: Callable[[Partition, int], CellSet], levels: int,
                    degree: int = 2, seeds_per_cell: int = 0, region_name: str = "region",
                    smooth_degree: Optional[int] = None) -> Tuple[pd.DataFrame, RegionMeasureReport]:
    """
    Perimeter and Gauss residual of `region(partition, level)` over successive refinements.

    Returns:
        (table, report): table with columns level, cells, gamma_size,
        perimeter, lhs, residual; report of the finest level carrying the history.
    """
    rows = []
    report = None
    for i, current in enumerate(refinement_levels(partition, levels)):
        level = build_level(current, degree, seeds_per_cell, smooth_degree)
        A = region(current, i)
        report = gauss_check(coordinate_field(level.basis), A, level.operators, level.basis, region_name)
        rows.append({"level": current.level, "cells": len(current.cells), "gamma_size": level.basis.size,
                     "perimeter": report.perimeter, "lhs": report.lhs, "residual": report.residual})
        logger.info(f"{region_name} level {current.level}: perimeter={report.perimeter:.8g} residual={report.residual:.3e}")
    report.history = rows
    return pd.DataFrame(rows), report
