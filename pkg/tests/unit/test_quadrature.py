import numpy as np
import pytest

from calculus.quadrature import (QuadratureRule, adapt_order, axis_nodes, lobatto_nodes, near_lobatto_nodes,
                                 radau_nodes)


def test_box_rule_is_exact_for_polynomials():
    rule = QuadratureRule.box([0.0, 1.0], [2.0, 2.0], 3)
    values = rule.points[:, 0] ** 5 * rule.points[:, 1] ** 2
    # ∫₀² x⁵ dx · ∫₁² y² dy = (64/6)(7/3)
    assert float(rule.integrate(values)) == pytest.approx(64.0 / 6.0 * 7.0 / 3.0, rel=1e-13)


def test_box_rule_on_a_facet_has_unit_weight_across():
    rule = QuadratureRule.box([0.5, 0.0], [0.5, 1.0], 2)
    assert np.allclose(rule.points[:, 0], 0.5)
    assert rule.weights.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("dimension, measure", [(1, 0.4), (2, np.pi * 0.04)])
def test_ball_rule_measures_the_ball(dimension, measure):
    rule = QuadratureRule.ball(np.full(dimension, 0.5), 0.2, 6)
    assert rule.weights.sum() == pytest.approx(measure, rel=1e-12)


def test_ball_rule_integrates_a_bump():
    center = np.array([0.3, 0.4])
    rule = QuadratureRule.ball(center, 0.1, 8)
    q = ((rule.points - center) ** 2).sum(axis=1) / 0.01
    # ∫ (1 - r²/R²)² over the disk of radius R is πR²/3
    assert float(rule.integrate((1.0 - q) ** 2)) == pytest.approx(np.pi * 0.01 / 3.0, rel=1e-12)


def test_ball_rule_rejects_3d():
    with pytest.raises(ValueError):
        QuadratureRule.ball(np.zeros(3), 1.0, 4)


def test_node_families():
    assert radau_nodes(3, "left")[0] == -1.0
    assert radau_nodes(3, "right")[-1] == 1.0
    lobatto = lobatto_nodes(4)
    assert lobatto[0] == -1.0 and lobatto[-1] == 1.0
    assert np.allclose(lobatto[1:3], [-1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0)])


def test_axis_nodes_follow_the_boundary():
    assert axis_nodes(3, True, False)[0] == -1.0
    assert axis_nodes(3, False, True)[-1] == 1.0
    assert len(axis_nodes(3, True, True)) == 3
    assert np.all(np.abs(axis_nodes(3, False, False)) < 1.0)


def test_radau_rejects_bad_input():
    with pytest.raises(ValueError):
        radau_nodes(0)
    with pytest.raises(ValueError):
        radau_nodes(3, "middle")


def test_adapt_order_stops_when_results_agree():
    calls = []

    def evaluate(order):
        calls.append(order)
        return np.array([1.0 + 2.0 ** -order])

    order, result = adapt_order(evaluate, 2, 1e-3)
    assert result[0] == pytest.approx(1.0, abs=1e-3)
    assert order == calls[-1]


def test_near_lobatto_nodes():
    assert np.allclose(near_lobatto_nodes(3), [-np.sqrt(0.992), 0.0, np.sqrt(0.992)])
    assert np.allclose(near_lobatto_nodes(2), [-np.sqrt(2.96 / 3.0), np.sqrt(2.96 / 3.0)])
    assert near_lobatto_nodes(1).tolist() == [0.0]
    assert np.allclose(near_lobatto_nodes(3, 0.0), np.polynomial.legendre.leggauss(3)[0])
    with pytest.raises(ValueError):
        near_lobatto_nodes(3, 1.0)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_near_lobatto_rule_is_exact_to_degree_2n_minus_3(n):
    nodes = near_lobatto_nodes(n)
    assert np.all(np.abs(nodes) < 1.0)
    # interpolatory weights from the moment system
    vandermonde = np.vander(nodes, n, increasing=True).T
    moments = np.array([(1.0 - (-1.0) ** (j + 1)) / (j + 1) for j in range(n)])
    weights = np.linalg.solve(vandermonde, moments)
    assert np.all(weights > 0.0)
    for j in range(2 * n - 2):
        exact = (1.0 - (-1.0) ** (j + 1)) / (j + 1)
        assert weights @ nodes ** j == pytest.approx(exact, abs=1e-12)
