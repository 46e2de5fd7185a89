"""
distrib.py

Ultrafunctions seen as generalized distributions: the pairing with test
functions, the splitting into a functional part and a singular part, and the
refinement study that stands in for the standard part.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from calculus.basis import UltraFun, project
from calculus.errors import SpecificationError
from calculus.geometry import Domain
from calculus.integral import inner
from calculus.localspace import bump_profile

logger = logging.getLogger(__name__)

TestFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(eq=False)
class SplitResult:
    """
    u = functional + singular.

    Attributes:
        functional: w°, u with its infinite values replaced by 0.
        singular: ψ = u - w°.
        singular_set: Γ indices where |ψ| exceeds the level tolerance.
        infinite_set: Γ indices where |u| exceeds the threshold.
        threshold: The "infinite" threshold used.
    """
    functional: UltraFun
    singular: UltraFun
    singular_set: np.ndarray
    infinite_set: np.ndarray
    threshold: float


def pair(u: UltraFun, phi: TestFunction) -> float:
    """⟨u, φ⟩ = ∮ u φ° dx."""
    return inner(u, project(u.basis, phi))


def default_threshold(u: UltraFun) -> float:
    return 1.0 / u.basis.partition.h ** 2


def split(u: UltraFun, infinite_threshold: Optional[float] = None, tol: float = 1e-12) -> SplitResult:
    """
    Split u into its functional and singular parts.

    Args:
        u: The ultrafunction.
        infinite_threshold: Values above it count as infinite
            (default 1/h² of the partition).
        tol: Level tolerance defining the singular set.
    """
    threshold = default_threshold(u) if infinite_threshold is None else float(infinite_threshold)
    if threshold <= 0.0:
        logger.error(f"Split requested with threshold {threshold}")
        raise SpecificationError(f"Infinite threshold must be positive, got {threshold}")
    infinite = np.flatnonzero(np.abs(u.values) > threshold)
    functional = u.values.copy()
    functional[infinite] = 0.0
    w = UltraFun(u.basis, functional)
    psi = UltraFun(u.basis, u.values - functional)
    singular = np.flatnonzero(np.abs(psi.values) > tol)
    logger.info(f"Split with threshold {threshold:.6g}: {infinite.size} infinite, {singular.size} singular Γ points")
    return SplitResult(w, psi, singular, infinite, threshold)


def mollifier(center, width: float) -> TestFunction:
    """Quartic bump of radius `width` at `center`, normalized to unit integral."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    mass = width * 16.0 / 15.0 if center.size == 1 else np.pi * width ** 2 / 3.0

    def func(points):
        r = np.linalg.norm(np.atleast_2d(points) - center, axis=1) / width
        return bump_profile(r) / mass
    return func


def test_battery(domain: Domain, count: int = 20) -> List[TestFunction]:
    """
    Fixed family of polynomial × bump test functions on the domain.

    Centers sweep the domain and powers cycle through 0..3, so the family
    separates ultrafunctions whose pairings differ anywhere in the interior.
    """
    lower = np.asarray(domain.lower)
    extent = domain.extent
    battery = []
    for j in range(count):
        fraction = (j + 0.5) / count
        power = j % 4
        if domain.dimension == 1:
            center = lower + extent * fraction
        else:
            center = lower + extent * np.array([fraction, ((7 * j) % count + 0.5) / count])
        width = 0.25 * float(np.min(extent))

        def phi(points, center=center, width=width, power=power):
            points = np.atleast_2d(points)
            scaled = (points - lower) / extent
            r = np.linalg.norm(points - center, axis=1) / width
            return scaled.sum(axis=1) ** power * bump_profile(r)
        battery.append(phi)
    return battery


def equivalent(u: UltraFun, v: UltraFun, battery: Sequence[TestFunction], tol: float = 1e-8) -> bool:
    """Observational equality of the distribution classes of u and v on the battery."""
    difference = u - v
    return max(abs(pair(difference, phi)) for phi in battery) <= tol


@dataclass(eq=False)
class StudyResult:
    table: pd.DataFrame
    limit: float
    error: float
    order: Optional[float]


def extrapolate(values: Sequence[float]):
    """
    Richardson-style limit from the last levels.

    The order is observed from the last three values (halving h); with fewer
    values or a degenerate ratio it falls back to 2.
    """
    values = list(values)
    order = None
    if len(values) >= 3:
        d1 = values[-2] - values[-3]
        d2 = values[-1] - values[-2]
        if d1 != 0.0 and d2 != 0.0 and 0.0 < abs(d2 / d1) < 1.0:
            order = float(np.log2(abs(d1 / d2)))
    p = order if order is not None else 2.0
    last, previous = values[-1], values[-2]
    limit = last + (last - previous) / (2.0 ** p - 1.0)
    return limit, abs(last - previous), order


def standard_part_study(u_builder: Callable[[int], UltraFun], phi: TestFunction, levels: int,
                        start_level: int = 0) -> StudyResult:
    """
    Pairing values over successive levels with an extrapolated limit.

    Args:
        u_builder: Maps a level index to the ultrafunction at that level.
        phi: Test function.
        levels: Number of levels (≥ 2).

    Returns:
        StudyResult with a (level, gamma_size, value, delta) table.
    """
    if levels < 2:
        raise SpecificationError(f"A standard-part study needs at least 2 levels, got {levels}")
    rows = []
    for level in range(start_level, start_level + levels):
        u = u_builder(level)
        value = pair(u, phi)
        delta = value - rows[-1]["value"] if rows else float("nan")
        rows.append({"level": level, "gamma_size": u.basis.size, "value": value, "delta": delta})
    limit, error, order = extrapolate([r["value"] for r in rows])
    return StudyResult(pd.DataFrame(rows), limit, error, order)
