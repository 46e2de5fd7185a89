import numpy as np
import pytest

from calculus import variational
from calculus.errors import SpecificationError


GAMMA = 4.0


@pytest.fixture
def oracle():
    return variational.Oracle1D(GAMMA)


def test_closed_form_values(oracle):
    g = GAMMA
    assert oracle.xi_candidate == pytest.approx(1.0 - np.sqrt(0.5), abs=1e-12)
    assert oracle.F(1.0) == pytest.approx(-g ** 2 / 24.0 - g / 2.0 + 0.5, abs=1e-12)
    assert oracle.dF(1.0 / g) == pytest.approx(g / 2.0 + 3.0 / 8.0, abs=1e-12)
    assert oracle.d2F(1.0) == pytest.approx(1.0 - g ** 2 / 4.0, abs=1e-12)
    assert variational.M(2.0) == pytest.approx(0.0, abs=1e-12)
    assert variational.gamma_star() == pytest.approx(2.0 * (3.0 + 2.0 * np.sqrt(2.0)), abs=1e-12)
    assert oracle.gamma_star == variational.gamma_star()


def test_M_is_the_energy_drop(oracle):
    assert oracle.M == pytest.approx(oracle.F(oracle.xi_limit) - oracle.F(1.0), abs=1e-12)


def test_derivatives_are_consistent(oracle):
    xi = np.linspace(0.1, 0.9, 9)
    eps = 1e-6
    assert np.allclose(oracle.dF(xi), (oracle.F(xi + eps) - oracle.F(xi - eps)) / (2 * eps), atol=1e-5)
    assert np.allclose(oracle.d2F(xi), (oracle.dF(xi + eps) - oracle.dF(xi - eps)) / (2 * eps), atol=1e-5)
    assert np.allclose(oracle.d3F(xi), (oracle.d2F(xi + eps) - oracle.d2F(xi - eps)) / (2 * eps), atol=1e-3)
    gammas = np.linspace(2.5, 19.5, 9)
    numeric = np.array([(variational.M(g + eps) - variational.M(g - eps)) / (2 * eps) for g in gammas])
    assert np.allclose([variational.dM(g) for g in gammas], numeric, atol=1e-5)


def test_sign_battery():
    s = np.linspace(0.0, 1.0, 101)
    assert np.all(variational.dphi(s) <= 0.0)
    for g in (3.0, 4.0, 10.0, 14.0):
        o = variational.Oracle1D(g)
        root = np.sqrt(2.0 / g)
        assert o.d3F(0.9 * root) < 0.0 < o.d3F(1.1 * root)
    assert all(variational.dM(g) < 0.0 for g in np.linspace(2.0, 20.0, 181))


def test_argmin_is_a_stationary_point(oracle):
    xi = oracle.argmin()
    assert 0.0 < xi < oracle.xi_limit
    assert oracle.dF(xi) == pytest.approx(0.0, abs=1e-6)
    grid = np.linspace(0.01, oracle.xi_limit, 500)
    assert oracle.F(xi) <= oracle.F(grid).min() + 1e-12


def test_jump_solution_shape(oracle):
    xi = 0.25
    u = oracle.jump_solution(xi)
    x = np.array([[0.0], [xi - 1e-9], [xi + 1e-9], [1.0]])
    values = u(x)
    assert values[0] == 0.0
    assert values[1] == pytest.approx(1.0, abs=1e-6)
    assert values[2] == pytest.approx(2.0, abs=1e-6)
    assert values[3] > 2.0


def test_competitor_gap_is_negative():
    for xi, eta in ((0.2, 0.3), (0.25, 0.5), (0.1, 0.9)):
        assert variational.competitor_energy_gap(GAMMA, xi, eta) < 0.0


def test_invalid_gamma():
    with pytest.raises(SpecificationError):
        variational.Oracle1D(0.0)
    with pytest.raises(SpecificationError):
        variational.Oracle1D(1.5).xi_candidate


def test_oracle_curve():
    curve = variational.oracle_curve(GAMMA)
    assert list(curve.columns) == ["xi", "F"]
    assert len(curve) == 200
    assert curve["xi"].iloc[-1] == 1.0
    assert variational.oracle_eval(GAMMA).F(1.0) == curve["F"].iloc[-1]
