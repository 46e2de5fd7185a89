import numpy as np
import pytest

from calculus.basis import (UltraFun, candidate_points, delta_at, evaluate, extra_candidates,
                            indicator_projection, project, sigma_at,
                            theta_projection, to_frame)
from calculus.errors import BasisError, ProjectionError
from calculus.geometry import CellSet
from calculus.integral import exact_integral, sqint
from calculus.level import build_level


def quadratic(points):
    return 1.0 + points[:, 0] - 2.0 * points[:, 0] ** 2


def test_gamma_sizes(line_level, line_seedless, square_level):
    assert line_level.basis.size == 8 * 5
    assert line_seedless.basis.size == 8 * 3
    assert square_level.basis.size == 16 * 13
    assert line_level.basis.is_seed.sum() == 16


def test_kronecker_and_duality(line_level, square_level):
    for basis in (line_level.basis, square_level.basis):
        for block in basis.blocks:
            n = len(block.points)
            assert np.allclose(block.evaluation @ block.sigma, np.eye(n), atol=1e-9)
            assert np.allclose(block.duality(), np.eye(n), atol=1e-8)


def test_eta_sums_to_the_domain_measure(line_level, square_level, square_seedless):
    for level in (line_level, square_level, square_seedless):
        assert level.basis.eta.sum() == pytest.approx(1.0, abs=1e-12)


def test_seedless_boundary_cells_put_points_on_the_boundary(line_seedless):
    points = line_seedless.basis.points[:, 0]
    assert np.isclose(points.min(), 0.0)
    assert np.isclose(points.max(), 1.0)


def test_projection_reproduces_polynomials(line_level):
    u = project(line_level.basis, quadratic)
    for x in (0.3, 0.61, 0.9):
        assert evaluate(u, [x]) == pytest.approx(quadratic(np.array([[x]]))[0], abs=1e-10)
    # ∫₀¹ 1 + x - 2x² = 1 + 1/2 - 2/3
    assert exact_integral(u) == pytest.approx(5.0 / 6.0, abs=1e-12)
    assert sqint(u) == pytest.approx(5.0 / 6.0, abs=1e-12)


def test_delta_reproduces_point_values(line_level, rng):
    basis = line_level.basis
    v = UltraFun(basis, rng.standard_normal(basis.size))
    for index in (0, 5, basis.size - 1):
        q = basis.points[index]
        assert sqint(v * delta_at(basis, q)) == pytest.approx(v.values[index], rel=1e-12)


def test_delta_at_a_non_gamma_point_raises(line_level):
    with pytest.raises(BasisError):
        delta_at(line_level.basis, [0.123456])


def test_sigma_integrates_to_eta(line_level):
    basis = line_level.basis
    assert sqint(sigma_at(basis, 3)) == pytest.approx(basis.eta[3])
    assert exact_integral(sigma_at(basis, 3)) == pytest.approx(basis.eta[3], rel=1e-10)


def test_projection_with_undefined_points(line_level):
    basis = line_level.basis
    marked = basis.points[2]
    u = project(basis, lambda p: 1.0 / (p[:, 0] - marked[0]), undefined=[marked])
    assert u.values[2] == 0.0
    assert np.all(np.isfinite(u.values))


def test_projection_rejects_non_finite_values(line_level):
    basis = line_level.basis
    marked = basis.points[2, 0]
    with pytest.raises(ProjectionError):
        project(basis, lambda p: 1.0 / (p[:, 0] - marked))


def test_arithmetic_and_basis_checks(line_level, square_level):
    a = project(line_level.basis, lambda p: p[:, 0])
    b = project(line_level.basis, lambda p: np.ones(len(p)))
    assert np.allclose((a + b).values, a.values + 1.0)
    assert np.allclose((2.0 * a - a).values, a.values)
    assert np.allclose((a * a).values, a.values ** 2)
    with pytest.raises(BasisError):
        a + square_level.basis.zeros()
    with pytest.raises(BasisError):
        UltraFun(line_level.basis, np.zeros(3))


def test_theta_and_indicator_projections(square_level):
    basis = square_level.basis
    E = CellSet.of(basis.partition, [0, 1, 4, 5])
    theta = theta_projection(basis, E)
    assert set(np.unique(theta.values)).issubset({0.0, 0.25, 0.5, 0.75, 1.0})
    open_chi = indicator_projection(basis, E)
    closed_chi = indicator_projection(basis, E, closed=True)
    assert np.all(open_chi.values <= closed_chi.values)
    inside = np.isin(basis.owners, [0, 1, 4, 5])
    assert np.all(closed_chi.values[inside] == 1.0)


def test_frame_and_summary(square_level):
    basis = square_level.basis
    frame = to_frame(project(basis, lambda p: p[:, 0] * p[:, 1]))
    assert list(frame.columns) == ["x", "y", "cell", "value"]
    assert len(frame) == basis.size
    summary = basis.summary()
    assert summary["gamma_size"] == basis.size
    assert summary["seeds"] == 64
    assert summary["eta_sum"] == pytest.approx(1.0, abs=1e-12)


def test_staggered_seeds_keep_the_small_candidate_grid(line_level, square_level):
    for level in (line_level, square_level):
        for block, space in zip(level.basis.blocks, level.spaces):
            grid = candidate_points(space)
            assert np.allclose(block.points[~block.is_seed], grid)
    assert np.all(line_level.basis.eta > 0.0)
    assert np.all(square_level.basis.eta > 0.0)


def test_centered_seed_widens_the_candidate_grid(line_partition):
    level = build_level(line_partition, 2, 1)
    space = level.spaces[3]
    # the lone seed sits on the middle node of the k+1 grid
    assert len(extra_candidates(space)) == 4
    assert level.basis.block(3).is_seed.sum() == 1
