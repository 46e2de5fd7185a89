import numpy as np
import pytest

from calculus import variational
from calculus.basis import project
from calculus.errors import IndefiniteFormError, SolverError, SpecificationError
from calculus.geometry import Domain, build_partition
from calculus.level import build_level


GAMMA = 4.0


@pytest.fixture(scope="module")
def free_end_level():
    """16 seedless cells on [0, 1], free at x = 1."""
    partition = build_partition(Domain((0.0,), (1.0,)), [16])
    return build_level(partition, 2, 0, natural_sides=variational.FREE_END)


@pytest.mark.parametrize("kwargs", [{"p": 1.0}, {"p": 2.0, "q": 2.0}, {"growth": -1.0}])
def test_spec_rejects_non_coercive_functionals(kwargs):
    with pytest.raises(SpecificationError):
        variational.FunctionalSpec(**kwargs)


def test_source_slope_defaults_to_a_central_difference():
    spec = variational.FunctionalSpec(source=lambda x, u: u ** 2, q=1.5)
    u = np.array([0.5, 2.0])
    assert np.allclose(spec.source_slope(None, u), 2.0 * u, rtol=1e-8)


def test_boundary_masks(line_seedless):
    basis = line_seedless.basis
    mask = variational.domain_boundary_mask(basis)
    assert mask.sum() == 2
    assert variational.degenerate_spec(GAMMA).boundary_mask(basis).sum() == 1
    assert variational.FunctionalSpec().boundary_mask(basis).sum() == 0


def test_facet_weight_vanishes_at_the_jump(free_end_level):
    functional = variational.Functional(variational.degenerate_spec(GAMMA), free_end_level)
    oracle = variational.Oracle1D(GAMMA)
    u = project(free_end_level.basis, oracle.jump_solution(0.25))
    weights = functional.facet_weights(u.values)
    at_jump = np.isclose(functional.centers[:, 0], 0.25)
    assert np.all(weights[at_jump] == 0.0)
    assert np.all(weights[functional.centers[:, 0] < 0.2] == 1.0)


def test_jump_candidate_energy_matches_the_closed_form(free_end_level):
    oracle = variational.Oracle1D(GAMMA)
    spec = variational.degenerate_spec(GAMMA)
    for xi in (0.125, 0.25, 0.5):
        u = project(free_end_level.basis, oracle.jump_solution(xi))
        assert variational.energy(spec, free_end_level, u) == pytest.approx(oracle.F(xi), abs=1e-9)


def test_degenerate_jump_is_near_the_oracle(free_end_level):
    result = variational.degenerate_1d(GAMMA, free_end_level, workers=2)
    assert abs(result.jump_location - result.oracle_jump) <= 2.0 * result.h
    assert result.jumps
    assert result.euler_energy == pytest.approx(result.candidates["energy"].min())
    assert result.energy <= result.euler_energy + 1e-12
    # facets up to √(2/γ) = 0.707, then the free end
    assert len(result.candidates) == 12
    assert result.candidates["kind"].tolist() == ["jump"] * 11 + ["end"]
    assert result.to_dict()["h"] == pytest.approx(1.0 / 16.0)


def test_euler_solve_finds_the_two_pieces(free_end_level):
    functional = variational.Functional(variational.degenerate_spec(GAMMA), free_end_level)
    oracle = variational.Oracle1D(GAMMA)
    points = free_end_level.basis.points
    values = variational.euler_solve(functional, 0.25, GAMMA)
    assert np.allclose(values, oracle.jump_solution(0.25)(points), atol=1e-3)
    assert functional.energy(values) <= oracle.F(0.25) + 1e-9
    assert functional.energy(values) == pytest.approx(oracle.F(0.25), abs=1e-3)
    # the branch without a jump reaches 1 at the free end
    end = variational.euler_solve(functional, 1.0, GAMMA)
    assert np.allclose(end, oracle.first_piece(1.0)(points[:, 0]), atol=1e-3)
    assert functional.energy(end) == pytest.approx(oracle.F(1.0), abs=1e-2)


def test_generic_minimizer_agrees_with_the_structured_solution(free_end_level):
    result = variational.degenerate_1d(GAMMA, free_end_level)
    generic = variational.minimize(variational.degenerate_spec(GAMMA), free_end_level, initial=result.u,
                                   restarts=0, lagged_iterations=0)
    assert abs(generic.energy - result.energy) <= 1e-6


@pytest.mark.integration
def test_large_gamma_jumps_inside():
    gamma = 14.0
    partition = build_partition(Domain((0.0,), (1.0,)), [64])
    level = build_level(partition, 2, 0, natural_sides=variational.FREE_END)
    result = variational.degenerate_1d(gamma, level, polish_sweeps=0)
    oracle = variational.Oracle1D(gamma)
    assert oracle.argmin() == pytest.approx(0.0675, abs=1e-3)
    assert result.jumps
    assert abs(result.jump_location - result.oracle_jump) <= 2.0 * result.h
    assert result.energy <= oracle.F(oracle.argmin()) + 0.1
    end = result.candidates.iloc[-1]
    assert end["kind"] == "end" and end["energy"] > result.energy


def test_functional_rejects_non_positive_weights(monkeypatch):
    partition = build_partition(Domain((0.0,), (1.0,)), [4])
    level = build_level(partition, 2, 0, natural_sides=variational.FREE_END)
    monkeypatch.setattr(level.basis, "nonpositive_eta", np.array([1]))
    with pytest.raises(IndefiniteFormError):
        variational.Functional(variational.degenerate_spec(GAMMA), level)
    with pytest.raises(IndefiniteFormError):
        variational.minimize(variational.smooth_spec(1.5), level)


def test_degenerate_1d_rejects_the_smooth_regime(free_end_level, square_seedless):
    with pytest.raises(SpecificationError):
        variational.degenerate_1d(1.5, free_end_level)
    with pytest.raises(SpecificationError):
        variational.degenerate_1d(GAMMA, square_seedless)


def test_plateau_competitor_gap(free_end_level):
    gap = variational.plateau_energy_gap(GAMMA, free_end_level, 0.25, 0.5)
    assert gap < 0.0
    assert gap == pytest.approx(variational.competitor_energy_gap(GAMMA, 0.25, 0.5), abs=1e-9)


def test_minimize_recovers_the_smooth_solution(free_end_level):
    gamma = 1.5
    result = variational.minimize(variational.smooth_spec(gamma), free_end_level, restarts=1)
    exact = variational.smooth_solution(gamma)(free_end_level.basis.points)
    assert np.max(np.abs(result.u.values - exact)) <= 1e-8
    assert result.converged
    assert all(b <= a + 1e-12 for a, b in zip(result.history, result.history[1:]))
    assert result.u.values[np.argmin(free_end_level.basis.points[:, 0])] == 0.0


def test_degenerate_spec_below_two_is_smooth(free_end_level):
    gamma = 1.5
    result = variational.minimize(variational.degenerate_spec(gamma), free_end_level, restarts=0)
    exact = variational.smooth_solution(gamma)(free_end_level.basis.points)
    assert np.max(np.abs(result.u.values - exact)) <= 1e-8


def test_poisson_is_exact_in_1d(line_seedless):
    source, exact = variational.poisson_oracle(line_seedless.partition)
    phi = project(line_seedless.basis, source)
    sparse = variational.poisson_solve(phi, line_seedless.operators)
    dense = variational.poisson_solve(phi, line_seedless.operators, method="dense")
    assert np.max(np.abs(sparse.values - exact(line_seedless.basis.points))) <= 1e-8
    assert np.allclose(sparse.values, dense.values, atol=1e-10)


def test_poisson_solver_errors(line_seedless):
    phi = project(line_seedless.basis, lambda p: np.ones(len(p)))
    with pytest.raises(SolverError):
        variational.poisson_solve(phi, line_seedless.operators, boundary=np.zeros(phi.basis.size, dtype=bool))
    with pytest.raises(SolverError):
        variational.poisson_solve(phi, line_seedless.operators, method="cholesky")


def test_poisson_study_converges_in_2d():
    partition = build_partition(Domain((0.0, 0.0), (1.0, 1.0)), [2, 2])
    table, u = variational.poisson_study(partition, 2, 3)
    assert list(table.columns) == ["level", "cells", "gamma_size", "max_error", "ratio", "solver_agreement"]
    errors = table["max_error"].to_numpy()
    assert np.all(errors[1:] < errors[:-1])
    assert table["ratio"].iloc[-1] >= 3.0
    assert u.basis.partition.level == 2


def test_smooth_study_table():
    partition = build_partition(Domain((0.0,), (1.0,)), [4])
    table = variational.smooth_study(1.5, partition, 2, 2, max_iterations=50)
    assert table["cells"].tolist() == [4, 8]
    assert (table["max_error"] <= 1e-8).all()
