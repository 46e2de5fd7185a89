"""
variational.py

Minimization of pointwise functionals

    J°(u) = ∮ [½ a(x, u) |D^a u|^p - f(x, u)] dx

over ultrafunctions vanishing on a boundary point set, the generalized Poisson
solver, and the one dimensional degenerate problem

    minimize ∫₀¹ ½ a(u) |u'|² - γ u,   u(0) = 0,   a = 0 on [1, 2], 1 elsewhere,

whose minimizer jumps from 1 to 2 once γ > 2, together with its closed form
energy F(ξ) as an independent oracle.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp
import scipy.sparse.linalg

from calculus.basis import GammaBasis, UltraFun, project
from calculus.derivative import DerivOperator, assemble_weak, operator_from_weak
from calculus.errors import IndefiniteFormError, SolverError, SpecificationError
from calculus.geometry import EXTERIOR
from calculus.level import Level, build_level, refinement_levels

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
BoundaryPredicate = Callable[[np.ndarray], np.ndarray]

_GRADIENT_FLOOR = 1e-8
_OPERATOR_CACHE_SIZE = 256
DEGENERATE_SLACK = 1e-9


def unit_coefficient(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.ones(len(u))


def no_source(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.zeros(len(u))


@dataclass(frozen=True)
class FunctionalSpec:
    """
    Coefficients of J°(u) = ∮ ½ a(x,u)|D^a u|^p - f(x,u).

    Attributes:
        coefficient: a(x, u) ≥ 0, vectorized over Γ points and values.
        source: f(x, u).
        source_derivative: ∂f/∂u; a central difference of `source` when None.
        p: Gradient exponent, p > 1.
        q: Growth exponent of f in u, q < p.
        growth: Constant M of the growth bound |f(x,u)| ≤ M(1 + |u|^q).
        boundary: Predicate on (m, d) points selecting the zero-Dirichlet
            set Ξ_bc ⊂ Γ; None leaves every point free.
    """
    coefficient: PointFunction = unit_coefficient
    source: PointFunction = no_source
    source_derivative: Optional[PointFunction] = None
    p: float = 2.0
    q: float = 1.0
    growth: float = 0.0
    boundary: Optional[BoundaryPredicate] = None

    def __post_init__(self):
        if self.p <= 1.0:
            raise SpecificationError(f"Gradient exponent must exceed 1, got p={self.p}")
        if self.p <= self.q:
            raise SpecificationError(f"Functional is not coercive: p={self.p} ≤ q={self.q}")
        if self.growth < 0.0:
            raise SpecificationError(f"Growth constant must be non-negative, got {self.growth}")

    def source_slope(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.source_derivative is not None:
            return np.asarray(self.source_derivative(x, u), dtype=float)
        eps = 1e-6 * np.maximum(1.0, np.abs(u))
        return (np.asarray(self.source(x, u + eps)) - np.asarray(self.source(x, u - eps))) / (2.0 * eps)

    def boundary_mask(self, basis: GammaBasis) -> np.ndarray:
        if self.boundary is None:
            return np.zeros(basis.size, dtype=bool)
        return np.asarray(self.boundary(basis.points), dtype=bool)


def domain_boundary_mask(basis: GammaBasis, tol: float = 1e-12) -> np.ndarray:
    """Γ ∩ ∂Ω."""
    domain = basis.partition.domain
    points = basis.points
    at_lower = np.abs(points - np.asarray(domain.lower)) <= tol
    at_upper = np.abs(points - np.asarray(domain.upper)) <= tol
    return np.any(at_lower | at_upper, axis=1)


class Functional:
    """
    J° on one level.

    D^a is D with the interface block of facet f scaled by
    a_f = max(a(u_Q), a(u_R), a(½(u_Q + u_R))) at the facet center, so the two
    sides of a facet decouple only when the coefficient vanishes over the
    whole range of the jump. Operators are cached by facet weights.

    Raises:
        IndefiniteFormError: If some η_a ≤ 0; J° is then unbounded below.
    """

    def __init__(self, spec: FunctionalSpec, level: Level):
        self.spec = spec
        self.level = level
        self.basis = level.basis
        if self.basis.nonpositive_eta.size:
            logger.error(f"Refusing a functional on a level with {self.basis.nonpositive_eta.size} weights η ≤ 0")
            raise IndefiniteFormError(f"J° needs η > 0 on every Γ point, min η = {self.basis.eta.min():.3e}")
        self.weak = [assemble_weak(self.basis, axis, level.natural_sides)
                     for axis in range(self.basis.dimension)]
        self._cache: Dict[bytes, Tuple[DerivOperator, ...]] = {}
        self._build_traces()

    def _build_traces(self):
        basis = self.basis
        natural = set(self.level.natural_sides)
        facets = basis.partition.facets
        n = basis.size
        inner_rows, outer_rows = [], []
        for facet in facets:
            center = facet.center.reshape(1, -1)
            owner = basis.block(facet.cell)
            row = np.zeros(n)
            row[owner.slice] = owner.space.values(center)[0] @ owner.sigma
            inner_rows.append(row)
            other = np.zeros(n)
            if facet.neighbor != EXTERIOR:
                neighbor = basis.block(facet.neighbor)
                other[neighbor.slice] = neighbor.space.values(center)[0] @ neighbor.sigma
            elif facet.side in natural:
                other = row
            outer_rows.append(other)
        self.centers = np.array([f.center for f in facets])
        self.inner_trace = sp.csr_matrix(np.array(inner_rows))
        self.outer_trace = sp.csr_matrix(np.array(outer_rows))

    def facet_weights(self, values: np.ndarray) -> np.ndarray:
        a = self.spec.coefficient
        t_in = self.inner_trace @ values
        t_out = self.outer_trace @ values
        middle = 0.5 * (t_in + t_out)
        return np.maximum.reduce([np.asarray(a(self.centers, t), dtype=float) for t in (t_in, t_out, middle)])

    def operators(self, weights: np.ndarray) -> Tuple[DerivOperator, ...]:
        if np.all(weights == 1.0):
            return self.level.operators
        key = weights.tobytes()
        cached = self._cache.get(key)
        if cached is None:
            if len(self._cache) >= _OPERATOR_CACHE_SIZE:
                self._cache.clear()
            cached = tuple(operator_from_weak(w, self.level.split, weights) for w in self.weak)
            self._cache[key] = cached
        return cached

    def derivatives(self, values: np.ndarray) -> List[np.ndarray]:
        """D^a_i u for every axis."""
        return [op.matrix @ values for op in self.operators(self.facet_weights(values))]

    def energy(self, values: np.ndarray) -> float:
        x = self.basis.points
        magnitude = np.sqrt(sum(d ** 2 for d in self.derivatives(values)))
        density = 0.5 * np.asarray(self.spec.coefficient(x, values)) * magnitude ** self.spec.p
        density = density - np.asarray(self.spec.source(x, values))
        return float(density @ self.basis.eta)

    def __call__(self, u: UltraFun) -> float:
        return self.energy(u.values)


def energy(spec: FunctionalSpec, level: Level, u: UltraFun) -> float:
    return Functional(spec, level)(u)


@dataclass(eq=False)
class MinimizeResult:
    u: UltraFun
    energy: float
    history: List[float] = field(default_factory=list)
    step: float = 0.0
    converged: bool = False
    sweeps: int = 0


def _solve_free(matrix: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    try:
        with np.errstate(all="ignore"):
            solution = scipy.sparse.linalg.spsolve(matrix.tocsc(), rhs)
        if np.all(np.isfinite(solution)):
            return np.atleast_1d(solution)
    except (RuntimeError, ValueError) as e:
        logger.warning(f"Sparse solve failed, falling back to least squares: {str(e)}")
    return scipy.linalg.lstsq(matrix.toarray(), rhs)[0]


def _lagged_solve(functional: Functional, values: np.ndarray, free: np.ndarray,
                  iterations: int, history: List[float]) -> np.ndarray:
    """Quadratic model solves with the coefficient frozen at the previous iterate."""
    spec = functional.spec
    basis = functional.basis
    x = basis.points
    H = sp.diags(basis.eta)
    current = functional.energy(values)
    for _ in range(iterations):
        ops = functional.operators(functional.facet_weights(values))
        partials = [op.matrix @ values for op in ops]
        magnitude = np.maximum(np.sqrt(sum(d ** 2 for d in partials)), _GRADIENT_FLOOR)
        c = 0.5 * spec.p * np.asarray(spec.coefficient(x, values), dtype=float) * magnitude ** (spec.p - 2.0)
        K = sum(op.matrix.T @ H @ sp.diags(c) @ op.matrix for op in ops).tocsr()
        rhs = basis.eta * spec.source_slope(x, values)
        trial = np.zeros_like(values)
        trial[free] = _solve_free(K[free][:, free], rhs[free])
        candidate = functional.energy(trial)
        if not candidate < current:
            break
        change = np.linalg.norm(trial - values)
        values, current = trial, candidate
        history.append(current)
        if change <= 1e-12 * (1.0 + np.linalg.norm(values)):
            break
    return values


def _descend(functional: Functional, values: np.ndarray, free: np.ndarray, step: float,
             step_tol: float, max_sweeps: int, history: List[float]):
    current = functional.energy(values)
    sweeps = 0
    while step > step_tol and sweeps < max_sweeps:
        improved = False
        for a in free:
            for move in (step, -step):
                trial = values.copy()
                trial[a] += move
                candidate = functional.energy(trial)
                if candidate < current - 1e-14 * max(1.0, abs(current)):
                    values, current = trial, candidate
                    improved = True
                    break
        sweeps += 1
        if improved:
            history.append(current)
        else:
            step *= 0.5
    return values, current, step, sweeps


def minimize(spec: FunctionalSpec, level: Level, initial: Optional[UltraFun] = None,
             max_iterations: int = 200, step: Optional[float] = None, step_tol: float = 1e-8,
             restarts: int = 2, seed: int = 12345, lagged_iterations: int = 20) -> MinimizeResult:
    """
    Minimize J° over ultrafunctions vanishing on the boundary set of `spec`.

    Lagged-coefficient quadratic solves give the starting point; coordinate
    descent with step halving then runs until the step falls below
    `step_tol`, so at termination no single Γ value can be moved by ±step
    with a decrease of J°. Restarts perturb the best iterate with a seeded
    generator and repeat both phases.

    Args:
        spec: The functional.
        level: Basis and operators (natural sides mark free ends).
        initial: Starting ultrafunction (default 0).
        max_iterations: Budget of descent sweeps per start.
        step: Initial descent step (default 1e-2·max(1, max|u|)).
        step_tol: Smallest step tried.
        restarts: Number of perturbed restarts.
        seed: Seed of the restart generator.

    Returns:
        MinimizeResult: Best iterate, its energy, the non-increasing energy
        history, the final step and whether the step tolerance was reached.
    """
    functional = Functional(spec, level)
    basis = level.basis
    free = np.flatnonzero(~spec.boundary_mask(basis))
    values = np.zeros(basis.size) if initial is None else initial.values.copy()
    values[~np.isin(np.arange(basis.size), free)] = 0.0

    history = [functional.energy(values)]
    values = _lagged_solve(functional, values, free, lagged_iterations, history)
    first_step = step if step is not None else 1e-2 * max(1.0, float(np.max(np.abs(values), initial=0.0)))
    values, best, last_step, sweeps = _descend(functional, values, free, first_step, step_tol,
                                               max_iterations, history)
    converged = last_step <= step_tol

    rng = np.random.default_rng(seed)
    for r in range(restarts):
        scale = 0.1 * max(1.0, float(np.max(np.abs(values), initial=0.0)))
        start = values.copy()
        start[free] += rng.normal(scale=scale, size=free.size)
        trial_history = [functional.energy(start)]
        start = _lagged_solve(functional, start, free, lagged_iterations, trial_history)
        start, candidate, trial_step, trial_sweeps = _descend(functional, start, free, first_step, step_tol,
                                                              max_iterations, trial_history)
        sweeps += trial_sweeps
        if candidate < best:
            logger.info(f"Restart {r} improved J° from {best:.10g} to {candidate:.10g}")
            values, best, last_step = start, candidate, trial_step
            converged = trial_step <= step_tol
            history.append(best)

    if not converged:
        logger.warning(f"Minimization stopped after {sweeps} sweeps with step {last_step:.3e} > {step_tol:.1e}")
    logger.info(f"Minimized J° = {best:.12g} over {free.size} free Γ values")
    return MinimizeResult(UltraFun(basis, values), best, history, last_step, converged, sweeps)


def poisson_solve(source: UltraFun, operators: Sequence[DerivOperator], boundary: Optional[np.ndarray] = None,
                  method: str = "sparse", tol: float = 1e-10) -> UltraFun:
    """
    Solve -Δ°u = φ with u = 0 on the boundary set.

    The free rows carry the η-weighted form Σ_i M_iᵀ H M_i u = H φ, which
    equals -H Σ_i M_i M_i u = H φ when D is antisymmetric; boundary rows are
    identity rows.

    Args:
        source: φ as an ultrafunction.
        operators: One DerivOperator per axis.
        boundary: Boolean mask of Ξ_bc over Γ (default Γ ∩ ∂Ω).
        method: "sparse" (scipy.sparse.linalg.spsolve) or "dense" (scipy.linalg.solve).
        tol: Relative residual accepted for the assembled system.

    Returns:
        UltraFun

    Raises:
        SolverError: If Ξ_bc is empty or the system is singular.
    """
    basis = source.basis
    mask = domain_boundary_mask(basis) if boundary is None else np.asarray(boundary, dtype=bool)
    if not mask.any():
        logger.error("Poisson solve requested without Dirichlet points")
        raise SolverError("Dirichlet set Ξ_bc is empty")
    free = np.flatnonzero(~mask)
    H = sp.diags(basis.eta)
    K = sum(op.matrix.T @ H @ op.matrix for op in operators).tocsr()
    K_ff = K[free][:, free]
    rhs = (basis.eta * source.values)[free]

    try:
        with np.errstate(all="ignore"):
            if method == "sparse":
                solution = np.atleast_1d(scipy.sparse.linalg.spsolve(K_ff.tocsc(), rhs))
            elif method == "dense":
                solution = scipy.linalg.solve(K_ff.toarray(), rhs, assume_a="sym")
            else:
                raise SolverError(f"Unknown solver method {method!r}")
    except (scipy.linalg.LinAlgError, RuntimeError) as e:
        logger.error(f"Poisson system is singular: {str(e)}")
        raise SolverError(f"Singular Poisson system (|Γ|={basis.size}, free={free.size}, "
                          f"min η={basis.eta.min():.3e}): {str(e)}") from e

    residual = np.linalg.norm(K_ff @ solution - rhs) if np.all(np.isfinite(solution)) else np.inf
    scale = np.linalg.norm(rhs) + np.linalg.norm(K_ff @ solution)
    if not residual <= tol * scale:
        logger.error(f"Poisson residual {residual:.3e} exceeds {tol:.1e} relative")
        raise SolverError(f"Singular or ill-conditioned Poisson system (|Γ|={basis.size}, free={free.size}, "
                          f"min η={basis.eta.min():.3e}, residual={residual:.3e})")
    values = np.zeros(basis.size)
    values[free] = solution
    logger.info(f"Solved Poisson system with {free.size} free and {int(mask.sum())} Dirichlet Γ points")
    return UltraFun(basis, values)


def smooth_solution(gamma: float) -> Callable[[np.ndarray], np.ndarray]:
    """u = (γ/2)(2x - x²), the minimizer when γ < 2."""
    return lambda points: 0.5 * gamma * (2.0 * points[:, 0] - points[:, 0] ** 2)


def phi(s):
    """Φ(s) = -s/2 + s²/2 - s³/6."""
    return -s / 2.0 + s ** 2 / 2.0 - s ** 3 / 6.0


def dphi(s):
    return -0.5 * (s - 1.0) ** 2


def gamma_star() -> float:
    """Above this γ the derivative of F has a single zero on (0, 1)."""
    return 2.0 * (3.0 + 2.0 * np.sqrt(2.0))


@dataclass(frozen=True)
class Oracle1D:
    """Closed-form quantities of the degenerate problem at a fixed γ > 0."""
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise SpecificationError(f"γ must be positive, got {self.gamma}")

    def _jump_branch(self):
        if not self.gamma > 2.0:
            raise SpecificationError(f"Jump solutions need γ > 2, got {self.gamma}")

    @property
    def xi_candidate(self) -> float:
        """ξ = 1 - √(1 - 2/γ), where u' of the first piece vanishes at x = 1."""
        self._jump_branch()
        return 1.0 - np.sqrt(1.0 - 2.0 / self.gamma)

    @property
    def xi_limit(self) -> float:
        """√(2/γ): largest ξ with the first piece staying ≤ 1."""
        return float(np.sqrt(2.0 / self.gamma))

    @property
    def gamma_star(self) -> float:
        return gamma_star()

    def F(self, xi):
        g = self.gamma
        return (g ** 2 * xi ** 3 / 8.0 - g ** 2 * xi ** 2 / 2.0 + g ** 2 * xi / 2.0 - g ** 2 / 6.0
                + 1.5 * g * xi - 2.0 * g + 1.0 / (2.0 * xi))

    def dF(self, xi):
        g = self.gamma
        return 3.0 * g ** 2 * xi ** 2 / 8.0 - g ** 2 * xi + g ** 2 / 2.0 + 1.5 * g - 1.0 / (2.0 * xi ** 2)

    def d2F(self, xi):
        g = self.gamma
        return 0.75 * g ** 2 * xi - g ** 2 + 1.0 / xi ** 3

    def d3F(self, xi):
        return 0.75 * self.gamma ** 2 - 3.0 / xi ** 4

    @property
    def M(self) -> float:
        return M(self.gamma)

    def first_piece(self, xi: float) -> Callable[[np.ndarray], np.ndarray]:
        g = self.gamma
        return lambda x: -g * x ** 2 / 2.0 + (1.0 / xi + g * xi / 2.0) * x

    def second_piece(self, start: float) -> Callable[[np.ndarray], np.ndarray]:
        g = self.gamma
        return lambda x: 2.0 + g * (x - start) - g * (x ** 2 - start ** 2) / 2.0

    def jump_solution(self, xi: float) -> Callable[[np.ndarray], np.ndarray]:
        """u jumping from 1 to 2 at ξ."""
        left, right = self.first_piece(xi), self.second_piece(xi)
        return lambda points: np.where(points[:, 0] < xi, left(points[:, 0]), right(points[:, 0]))

    def plateau_solution(self, xi: float, eta: float) -> Callable[[np.ndarray], np.ndarray]:
        """Competitor jumping to 2 at ξ, flat on (ξ, η), then rising with zero end slope."""
        g = self.gamma
        left = self.first_piece(xi)

        def func(points):
            x = points[:, 0]
            tail = g * eta ** 2 / 2.0 - g * eta - g * x ** 2 / 2.0 + g * x + 2.0
            return np.where(x < xi, left(x), np.where(x < eta, 2.0, tail))
        return func

    def argmin(self, samples: int = 4001, tol: float = 1e-12) -> float:
        """argmin F on (0, √(2/γ)]: dense grid, then golden section around the best sample."""
        upper = self.xi_limit
        grid = np.linspace(upper / samples, upper, samples)
        values = self.F(grid)
        best = int(np.argmin(values))
        if best == 0 or best == samples - 1:
            return float(grid[best])
        result = scipy.optimize.minimize_scalar(self.F, bracket=(grid[best - 1], grid[best], grid[best + 1]),
                                                method="golden", tol=tol)
        return float(result.x)


def M(gamma: float) -> float:
    """M(γ) = F(√(2/γ)) - F(1)."""
    g = gamma
    return g ** 1.5 / np.sqrt(2.0) - g ** 2 / 8.0 - 2.5 * g + 2.0 * np.sqrt(2.0) * np.sqrt(g) - 0.5


def dM(gamma: float) -> float:
    g = gamma
    return 0.25 * (-g + 3.0 * np.sqrt(2.0) * np.sqrt(g) + 4.0 * np.sqrt(2.0) / np.sqrt(g) - 10.0)


def oracle_eval(gamma: float) -> Oracle1D:
    return Oracle1D(float(gamma))


def oracle_curve(gamma: float, samples: int = 200, start: float = 0.02) -> pd.DataFrame:
    """(ξ, F(ξ)) on [start, 1]."""
    oracle = Oracle1D(float(gamma))
    xi = np.linspace(start, 1.0, samples)
    return pd.DataFrame({"xi": xi, "F": oracle.F(xi)})


def competitor_energy_gap(gamma: float, xi: float, eta: float) -> float:
    """J(single jump at ξ) - J(plateau on (ξ, η)) = γ²(Φ(η) - Φ(ξ))."""
    return float(gamma ** 2 * (phi(eta) - phi(xi)))


def degenerate_coefficient(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """0 on [1 - DEGENERATE_SLACK, 2 + DEGENERATE_SLACK], 1 elsewhere."""
    return np.where((u >= 1.0 - DEGENERATE_SLACK) & (u <= 2.0 + DEGENERATE_SLACK), 0.0, 1.0)


def degenerate_spec(gamma: float) -> FunctionalSpec:
    """a(u) = 0 on [1, 2], f = γu, u(0) = 0, free at x = 1."""
    return FunctionalSpec(coefficient=degenerate_coefficient,
                          source=lambda x, u: gamma * u,
                          source_derivative=lambda x, u: np.full(len(u), gamma),
                          p=2.0, q=1.0, growth=gamma,
                          boundary=lambda points: points[:, 0] <= 1e-12)


def smooth_spec(gamma: float) -> FunctionalSpec:
    """a ≡ 1, f = γu, u(0) = 0, free at x = 1."""
    return FunctionalSpec(source=lambda x, u: gamma * u,
                          source_derivative=lambda x, u: np.full(len(u), gamma),
                          p=2.0, q=1.0, growth=gamma,
                          boundary=lambda points: points[:, 0] <= 1e-12)


FREE_END = ((0, "upper"),)


@dataclass(eq=False)
class DegenerateResult:
    gamma: float
    u: UltraFun
    jump_location: float
    energy: float
    oracle_jump: float
    oracle_energy: float
    candidates: pd.DataFrame
    euler_energy: float = 0.0

    @property
    def h(self) -> float:
        return self.u.basis.partition.h

    @property
    def jumps(self) -> bool:
        return self.jump_location < 1.0

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "jump_location": self.jump_location, "energy": self.energy,
                "oracle_jump": self.oracle_jump, "oracle_energy": self.oracle_energy, "h": self.h}


def jump_facets(level: Level, limit: Optional[float] = None) -> np.ndarray:
    """
    Candidate jump locations of a 1D level, increasing.

    The interior facets up to `limit`, then the free end x = 1, which stands
    for the branch that reaches 1 only at the end and never jumps.
    """
    interior = sorted(float(f.center[0]) for f in level.partition.facets if f.neighbor != EXTERIOR)
    if limit is not None:
        interior = [xi for xi in interior if xi <= limit + 1e-12]
    return np.array(interior + [float(level.partition.domain.upper[0])])


def _facet_at(level: Level, xi: float):
    for facet in level.partition.facets:
        if abs(float(facet.center[0]) - xi) <= 1e-12 * max(1.0, abs(xi)):
            return facet
    raise SpecificationError(f"No facet at x = {xi}")


def euler_solve(functional: Functional, xi: float, gamma: float) -> np.ndarray:
    """
    Discrete Euler solve of the degenerate problem with its jump at the facet ξ.

    Minimizes ½ uᵀ K u - γ ηᵀu, K = Σ_i M_iᵀ H M_i with the facet ξ decoupled,
    over Γ values vanishing on the Dirichlet set, with the left trace 1 and
    the right trace 2 at ξ. At the free end only the trace 1 is imposed. The
    constrained quadratic is solved through its KKT system.

    Raises:
        SolverError: If the KKT system is singular.
    """
    basis = functional.basis
    facet = _facet_at(functional.level, xi)
    weights = np.ones(len(functional.level.partition.facets))
    rows, targets = [functional.inner_trace[facet.id]], [1.0]
    if not facet.is_exterior:
        weights[facet.id] = 0.0
        rows.append(functional.outer_trace[facet.id])
        targets.append(2.0)
    H = sp.diags(basis.eta)
    K = sum(op.matrix.T @ H @ op.matrix for op in functional.operators(weights)).toarray()
    free = ~functional.spec.boundary_mask(basis)
    C = sp.vstack(rows).toarray()[:, free]
    m = len(targets)
    system = np.block([[K[np.ix_(free, free)], C.T], [C, np.zeros((m, m))]])
    rhs = np.concatenate([gamma * basis.eta[free], targets])
    try:
        solution = scipy.linalg.solve(system, rhs)
    except scipy.linalg.LinAlgError as e:
        logger.error(f"Euler system singular for a jump at {xi:.6f}: {str(e)}")
        raise SolverError(f"Singular Euler system for the jump at {xi:.6f}: {str(e)}") from e
    values = np.zeros(basis.size)
    values[free] = solution[:int(free.sum())]
    return values


def polish(spec: FunctionalSpec, level: Level, u: UltraFun, max_sweeps: int = 200,
           rounds: int = 4, seed: int = 12345) -> MinimizeResult:
    """Plain coordinate descent from `u`, repeated until a whole pass leaves J° unchanged."""
    options = dict(max_iterations=max_sweeps, restarts=0, lagged_iterations=0, seed=seed)
    result = minimize(spec, level, initial=u, **options)
    for _ in range(rounds):
        again = minimize(spec, level, initial=result.u, **options)
        if not again.energy < result.energy:
            return result
        result = again
    logger.warning(f"Descent still moving after {rounds + 1} passes, J° = {result.energy:.12g}")
    return result


def degenerate_1d(gamma: float, level: Level, workers: Optional[int] = None,
                  polish_sweeps: int = 200) -> DegenerateResult:
    """
    Solve the degenerate problem by enumerating the jump facet.

    Every interior facet ξ ≤ √(2/γ) and the free end ξ = 1 get an Euler solve
    (see euler_solve) and their J°; the lowest energy wins, ties going to the
    smaller ξ. The winner is then polished by coordinate descent on J° itself,
    which is the same descent the generic minimizer runs.

    Args:
        gamma: γ > 2.
        level: 1D level with the free end at x = 1 (natural side (0, "upper")).
        workers: Threads solving candidates (default: executor default).
        polish_sweeps: Descent sweeps per polishing pass; 0 skips polishing.

    Returns:
        DegenerateResult carrying the oracle argmin of F next to the discrete jump.

    Raises:
        SpecificationError: If γ ≤ 2 or the level is not one dimensional.
    """
    if not gamma > 2.0:
        logger.error(f"Degenerate jump solve requested for γ={gamma}")
        raise SpecificationError(f"The jump regime needs γ > 2, got {gamma}")
    if level.partition.dimension != 1:
        raise SpecificationError(f"The degenerate problem is one dimensional, got d={level.partition.dimension}")
    oracle = Oracle1D(float(gamma))
    spec = degenerate_spec(gamma)
    functional = Functional(spec, level)
    basis = level.basis
    candidates = jump_facets(level, oracle.xi_limit)

    def solve(xi):
        values = euler_solve(functional, float(xi), gamma)
        return values, functional.energy(values)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        solved = list(pool.map(solve, candidates))

    energies = [e for _, e in solved]
    best = int(np.argmin(energies))
    xi = float(candidates[best])
    u = UltraFun(basis, solved[best][0])
    energy = float(energies[best])
    if polish_sweeps > 0:
        polished = polish(spec, level, u, polish_sweeps)
        if polished.energy < energy:
            u, energy = polished.u, polished.energy
    xi_oracle = oracle.argmin()
    logger.info(f"Degenerate γ={gamma}: jump at {xi:.6f} (oracle {xi_oracle:.6f}), "
                f"J°={energy:.10g} (Euler {energies[best]:.10g})")
    kinds = ["jump" if c < candidates[-1] else "end" for c in candidates]
    table = pd.DataFrame({"xi": candidates, "energy": energies, "kind": kinds})
    return DegenerateResult(float(gamma), u, xi, energy, xi_oracle, float(oracle.F(xi_oracle)), table,
                            float(energies[best]))


def plateau_energy_gap(gamma: float, level: Level, xi: float, eta: float) -> float:
    """J°(single jump at ξ) - J°(plateau competitor on (ξ, η)) on the level."""
    oracle = Oracle1D(float(gamma))
    functional = Functional(degenerate_spec(gamma), level)
    single = project(level.basis, oracle.jump_solution(xi))
    plateau = project(level.basis, oracle.plateau_solution(xi, eta))
    return functional(single) - functional(plateau)


def poisson_oracle(partition) -> Tuple[Callable, Callable]:
    """
    (source, exact) of the reference problem on the partition's domain:
    -u'' = 1 with u = (x - a)(b - x)/2 in 1D, and the first sine eigenfunction in 2D.
    """
    lower = np.asarray(partition.domain.lower)
    extent = partition.domain.extent
    if partition.dimension == 1:
        a, b = lower[0], lower[0] + extent[0]
        return (lambda p: np.ones(len(p)),
                lambda p: 0.5 * (p[:, 0] - a) * (b - p[:, 0]))
    k = np.pi / extent

    def exact(p):
        return np.sin(k[0] * (p[:, 0] - lower[0])) * np.sin(k[1] * (p[:, 1] - lower[1]))
    return (lambda p: float(k @ k) * exact(p)), exact


def poisson_study(partition, degree: int, levels: int, seeds_per_cell: int = 0,
                  smooth_degree: Optional[int] = None, **tolerances) -> Tuple[pd.DataFrame, UltraFun]:
    """
    Max Γ error of the Poisson solution over successive refinements, with the
    ratio to the previous level and the agreement of the sparse and dense solves.

    Returns:
        (table, u): the per-level table and the solution on the finest level.
    """
    rows = []
    for current in refinement_levels(partition, levels):
        level = build_level(current, degree, seeds_per_cell, smooth_degree, **tolerances)
        source, exact = poisson_oracle(current)
        phi = project(level.basis, source)
        u = poisson_solve(phi, level.operators)
        dense = poisson_solve(phi, level.operators, method="dense")
        error = float(np.max(np.abs(u.values - exact(level.basis.points))))
        agreement = float(np.max(np.abs(u.values - dense.values)))
        ratio = rows[-1]["max_error"] / error if rows and error > 0.0 else float("nan")
        rows.append({"level": current.level, "cells": len(current.cells), "gamma_size": level.basis.size,
                     "max_error": error, "ratio": ratio, "solver_agreement": agreement})
        logger.info(f"Poisson level {current.level}: max error {error:.3e}")
    return pd.DataFrame(rows), u


def smooth_study(gamma: float, partition, degree: int, levels: int, max_iterations: int = 200,
                 seed: int = 12345) -> pd.DataFrame:
    """Generic minimizer on the γ < 2 problem against (γ/2)(2x - x²) over successive refinements."""
    spec = degenerate_spec(gamma) if gamma < 2.0 else smooth_spec(gamma)
    exact = smooth_solution(gamma)
    rows = []
    for current in refinement_levels(partition, levels):
        level = build_level(current, degree, 0, natural_sides=FREE_END)
        result = minimize(spec, level, max_iterations=max_iterations, restarts=0, seed=seed)
        error = float(np.max(np.abs(result.u.values - exact(level.basis.points))))
        rows.append({"level": current.level, "cells": len(current.cells), "gamma_size": level.basis.size,
                     "energy": result.energy, "max_error": error, "converged": bool(result.converged)})
    return pd.DataFrame(rows)
