import numpy as np
import pytest

from calculus import distrib
from calculus.basis import UltraFun, delta_at, project
from calculus.errors import CalculusError, SpecificationError
from calculus.geometry import Domain, build_partition
from calculus.level import build_level
from calculus.quadrature import QuadratureRule


def test_pairing_with_a_polynomial_test_function(line_level):
    basis = line_level.basis
    one = project(basis, lambda p: np.ones(len(p)))
    assert distrib.pair(one, lambda p: p[:, 0] ** 2) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_pairing_with_a_delta(line_level):
    basis = line_level.basis
    q = basis.points[9]
    value = distrib.pair(delta_at(basis, q), lambda p: np.cos(p[:, 0]))
    assert value == pytest.approx(np.cos(q[0]), rel=1e-12)


def test_split_separates_infinite_values(line_level):
    basis = line_level.basis
    values = np.ones(basis.size)
    values[4] = 1e9
    result = distrib.split(UltraFun(basis, values))
    assert result.infinite_set.tolist() == [4]
    assert result.singular_set.tolist() == [4]
    assert result.functional.values[4] == 0.0
    assert np.allclose((result.functional + result.singular).values, values)
    assert result.threshold == pytest.approx(64.0)


def test_split_without_infinite_values(line_level):
    basis = line_level.basis
    result = distrib.split(project(basis, lambda p: p[:, 0]), infinite_threshold=10.0)
    assert result.infinite_set.size == 0
    assert np.all(result.singular.values == 0.0)


def test_split_rejects_a_non_positive_threshold(line_level):
    with pytest.raises(SpecificationError):
        distrib.split(line_level.basis.zeros(), infinite_threshold=0.0)
    # still a ValueError for callers that only catch bad input
    with pytest.raises(ValueError):
        distrib.split(line_level.basis.zeros(), infinite_threshold=-1.0)
    assert issubclass(SpecificationError, CalculusError)


@pytest.mark.parametrize("center", [[0.5], [0.4, 0.6]])
def test_mollifier_has_unit_mass(center):
    width = 0.1
    rule = QuadratureRule.ball(np.asarray(center), width, 10)
    assert float(rule.integrate(distrib.mollifier(center, width)(rule.points))) == pytest.approx(1.0, rel=1e-12)


def test_battery_separates_functions(square_level):
    basis = square_level.basis
    battery = distrib.test_battery(basis.partition.domain)
    assert len(battery) == 20
    u = project(basis, lambda p: p[:, 0] * p[:, 1])
    assert distrib.equivalent(u, u + basis.zeros(), battery)
    bump = UltraFun(basis, np.where(basis.owners == 5, 1.0, 0.0))
    assert not distrib.equivalent(u, u + bump, battery)


def test_extrapolate_recovers_a_second_order_limit():
    limit, error, order = distrib.extrapolate([2.0, 1.25, 1.0625])
    assert order == pytest.approx(2.0)
    assert limit == pytest.approx(1.0)
    assert error == pytest.approx(0.1875)


def test_extrapolate_falls_back_to_order_two():
    limit, error, order = distrib.extrapolate([1.5, 1.125])
    assert order is None
    assert limit == pytest.approx(1.0)


def test_standard_part_study():
    partitions = [build_partition(Domain((0.0,), (1.0,)), [n]) for n in (4, 8, 16)]

    def builder(index):
        basis = build_level(partitions[index], 2, 0).basis
        return project(basis, lambda p: np.exp(p[:, 0]))

    study = distrib.standard_part_study(builder, lambda p: np.ones(len(p)), 3)
    assert study.table["gamma_size"].tolist() == [12, 24, 48]
    assert np.isnan(study.table["delta"].iloc[0])
    assert study.limit == pytest.approx(np.e - 1.0, abs=1e-6)
    with pytest.raises(SpecificationError):
        distrib.standard_part_study(builder, lambda p: np.ones(len(p)), 1)
