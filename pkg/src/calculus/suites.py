"""
suites.py

Identity suites run by the `check` command. Every suite returns the largest
(relative where stated) violation it saw; the caller compares it against the
configured tolerance.
"""

import logging
from typing import Callable, Dict, List, Tuple

import numpy as np

from calculus.basis import UltraFun, project, theta_projection
from calculus.derivative import boundary_flux
from calculus.gauss import disk_region, gauss_check, koch_region
from calculus.geometry import CellSet, Partition
from calculus.integral import cell_integral, inner
from calculus.level import Level
from calculus.quadrature import QuadratureRule
from calculus import variational

logger = logging.getLogger(__name__)


def _random_function(level: Level, rng: np.random.Generator) -> UltraFun:
    return UltraFun(level.basis, rng.standard_normal(level.basis.size))


def _random_cells(partition: Partition, rng: np.random.Generator) -> CellSet:
    ids = np.flatnonzero(rng.random(len(partition.cells)) < 0.5)
    return CellSet.of(partition, ids.tolist())


def _interior_cells(partition: Partition) -> np.ndarray:
    return np.array([not partition.touches_boundary(c.id) for c in partition.cells])


def duality(level: Level, rng=None) -> float:
    """max |∮-dual pairing ∫σ_a 𝔡_b - δ_ab| over the cells."""
    return max(float(np.max(np.abs(b.duality() - np.eye(len(b.points))))) for b in level.basis.blocks)


def kronecker(level: Level, rng=None) -> float:
    """max |σ_a(b) - δ_ab|."""
    return max(float(np.max(np.abs(b.evaluation @ b.sigma - np.eye(len(b.points))))) for b in level.basis.blocks)


def delta(level: Level, rng: np.random.Generator, count: int = 100) -> float:
    """
    |∮ v δ_q - v(q)| for random v and every q, with δ_q read from the modal
    δ tables, and |‖σ_a‖² - η_a| relative to 1 + |η_a|.
    """
    basis = level.basis
    worst = 0.0
    deltas = [b.evaluation @ b.delta for b in basis.blocks]
    for _ in range(count):
        v = rng.standard_normal(basis.size)
        for block, table in zip(basis.blocks, deltas):
            local = v[block.slice]
            paired = (local * block.eta) @ table
            worst = max(worst, float(np.max(np.abs(paired - local))))
    for a in range(basis.size):
        sigma = np.zeros(basis.size)
        sigma[a] = 1.0
        norm2 = float((sigma * sigma) @ basis.eta)
        worst = max(worst, abs(norm2 - basis.eta[a]) / (1.0 + abs(basis.eta[a])))
    return worst


def symmetry(level: Level, rng=None) -> float:
    """max |δ_a(b) - δ_b(a)| within each cell."""
    worst = 0.0
    for block in level.basis.blocks:
        table = block.evaluation @ block.delta
        worst = max(worst, float(np.max(np.abs(table - table.T))))
    return worst


def integration_by_parts(level: Level, rng: np.random.Generator, count: int = 100) -> float:
    """|inner(D_i u, v) + inner(u, D_i v)| / (1 + ‖u‖‖v‖) over random pairs and every axis."""
    worst = 0.0
    for op in level.operators:
        for _ in range(count):
            u = _random_function(level, rng)
            v = _random_function(level, rng)
            scale = 1.0 + np.sqrt(abs(inner(u, u)) * abs(inner(v, v)))
            worst = max(worst, abs(inner(op.apply(u), v) + inner(u, op.apply(v))) / scale)
    return worst


def ibp_matrix(level: Level, rng=None) -> float:
    """‖HM + MᵀH‖_max / ‖HM‖_max."""
    worst = 0.0
    for op in level.operators:
        hm = op.weak
        sym = (hm + hm.T).tocoo()
        top = float(np.max(np.abs(sym.data), initial=0.0))
        worst = max(worst, top / float(np.max(np.abs(hm.data))))
    return worst


def consistency_powers(level: Level) -> List[Tuple[int, ...]]:
    """
    Exponents α of the monomials x^α whose derivatives D reproduces.

    The Γ-rule is exact on products of a derivative with V(Q) when the
    derivative is linear, and on seedless levels also when f has degree
    ≤ k - 1 in every variable.
    """
    k = level.basis.degree
    d = level.basis.dimension
    total = min(2, k)
    powers = {p for p in np.ndindex(*([k + 1] * d)) if sum(p) <= total}
    if not len(level.seeds):
        powers |= set(np.ndindex(*([k] * d)))
    return sorted(powers)


def consistency(level: Level, rng: np.random.Generator) -> float:
    """D_i f° against (∂_i f)° at Γ points of cells away from ∂Ω, for a random f in the exact class."""
    basis = level.basis
    powers = consistency_powers(level)
    coefficients = rng.standard_normal(len(powers))

    def f(points):
        return sum(c * np.prod(points ** np.asarray(p), axis=1) for c, p in zip(coefficients, powers))

    def df(points, axis):
        total = np.zeros(len(points))
        for c, p in zip(coefficients, powers):
            if p[axis] == 0:
                continue
            lowered = np.asarray(p).copy()
            lowered[axis] -= 1
            total += c * p[axis] * np.prod(points ** lowered, axis=1)
        return total

    mask = _interior_cells(basis.partition)[basis.owners]
    if not mask.any():
        return 0.0
    u = project(basis, f)
    worst = 0.0
    for op in level.operators:
        expected = df(basis.points, op.axis)
        worst = max(worst, float(np.max(np.abs(op.apply(u).values - expected)[mask])))
    return worst


def interface_identity(level: Level, rng: np.random.Generator, count: int = 20) -> float:
    """
    ∮ D_i(u°θ°_E) v = ∫_E ∂_i u v - ∫_{∂E} u {v} n_E,i dS for random linear
    (quadratic when k ≥ 2) u, random v and random unions of cells E.
    """
    basis = level.basis
    partition = basis.partition
    worst = 0.0
    for _ in range(count):
        c = rng.standard_normal(basis.dimension + 2)
        quadratic = c[-1] if basis.degree >= 2 else 0.0

        def u(points, c=c, quadratic=quadratic):
            return c[0] + points @ c[1:-1] + quadratic * points[:, 0] ** 2

        E = _random_cells(partition, rng)
        theta = theta_projection(basis, E)
        w = project(basis, u) * theta
        v = _random_function(level, rng)
        for op in level.operators:
            i = op.axis

            def du(points, i=i, c=c, quadratic=quadratic):
                return np.full(len(points), c[1 + i]) + (2.0 * quadratic * points[:, 0] if i == 0 else 0.0)

            lhs = inner(op.apply(w), v)
            rhs = cell_integral(du, v, E, extra_order=2) + boundary_flux(E, v, i, weight=u)
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
    return worst


def gauss_theorem(level: Level, rng: np.random.Generator, count: int = 50) -> float:
    """Gauss residual / (1 + |lhs|) for random fields on random, disk and Koch regions."""
    basis = level.basis
    partition = basis.partition
    regions = [_random_cells(partition, rng) for _ in range(count)]
    if basis.dimension == 2:
        regions[0] = disk_region(partition)
        regions[1] = koch_region(partition, depth=2)
    worst = 0.0
    for A in regions:
        phi = [_random_function(level, rng) for _ in range(basis.dimension)]
        report = gauss_check(phi, A, level.operators, basis)
        worst = max(worst, report.residual / (1.0 + abs(report.lhs)))
    return worst


def classical_flux(partition: Partition, E: CellSet, field: Callable[[np.ndarray, int], np.ndarray],
                   degree: int) -> float:
    """∫_{∂E} φ·n_E dS by facet Gauss quadrature."""
    total = 0.0
    for facet in partition.facets:
        owner_in = facet.cell in E
        neighbor_in = not facet.is_exterior and facet.neighbor in E
        if owner_in == neighbor_in:
            continue
        inside = facet.cell if owner_in else facet.neighbor
        rule = QuadratureRule.box(facet.lower, facet.upper, degree + 2)
        n = facet.normal_from(inside)[facet.axis]
        total += float(rule.integrate(field(rule.points, facet.axis))) * n
    return total


def flux(level: Level, rng: np.random.Generator) -> float:
    """
    Σ_i ∮ D_i φ_i θ°_E against the classical outward flux, for a continuous
    polynomial field and E the cells away from ∂Ω.
    """
    basis = level.basis
    partition = basis.partition
    interior = np.flatnonzero(_interior_cells(partition))
    if not interior.size:
        return 0.0
    E = CellSet.of(partition, interior.tolist())
    c = rng.standard_normal((basis.dimension, basis.dimension + 1))

    def field(points, axis):
        return c[axis, 0] + points @ c[axis, 1:]

    theta = theta_projection(basis, E)
    lhs = sum(inner(op.apply(project(basis, lambda p, a=op.axis: field(p, a))), theta) for op in level.operators)
    rhs = classical_flux(partition, E, field, basis.degree)
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def oracle(level=None, rng=None) -> float:
    """Closed-form values of the degenerate problem against their hand-derived numbers."""
    g = 4.0
    o = variational.Oracle1D(g)
    errors = [
        o.xi_candidate - (1.0 - np.sqrt(0.5)),
        o.F(1.0) - (-g ** 2 / 24.0 - g / 2.0 + 0.5),
        o.dF(1.0 / g) - (g / 2.0 + 3.0 / 8.0),
        o.d2F(1.0) - (1.0 - g ** 2 / 4.0),
        variational.M(2.0),
        variational.gamma_star() - 2.0 * (3.0 + 2.0 * np.sqrt(2.0)),
        variational.M(g) - (o.F(o.xi_limit) - o.F(1.0)),
    ]
    return float(np.max(np.abs(errors)))


SUITES: List[Tuple[str, Callable]] = [
    ("duality", duality),
    ("kronecker", kronecker),
    ("delta", delta),
    ("symmetry", symmetry),
    ("ibp", integration_by_parts),
    ("ibp_matrix", ibp_matrix),
    ("consistency", consistency),
    ("interface", interface_identity),
    ("gauss", gauss_theorem),
    ("flux", flux),
    ("oracle", oracle),
]


def run_suite(name: str, level: Level, seed: int) -> float:
    """Run one suite by name with a generator seeded from `seed`."""
    registry: Dict[str, Callable] = dict(SUITES)
    value = float(registry[name](level, np.random.default_rng(seed)))
    logger.info(f"Suite {name} on d={level.partition.dimension}: max error {value:.3e}")
    return value
