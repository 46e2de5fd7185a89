import numpy as np
import pytest

from calculus import gauss
from calculus.basis import UltraFun
from calculus.geometry import CellSet, Domain, build_partition, rasterize, refine
from calculus.level import build_level


def test_koch_polyline_grows_by_four_thirds():
    for depth in range(4):
        points = gauss.koch_polyline(depth)
        assert len(points) == 4 ** depth + 1
        length = np.linalg.norm(np.diff(points, axis=0), axis=1).sum()
        assert length == pytest.approx((4.0 / 3.0) ** depth)
        assert np.allclose(points[0], [0.0, 0.35]) and np.allclose(points[-1], [1.0, 0.35])


def test_polygon_contains():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    inside = gauss.polygon_contains(np.array([[0.5, 0.5], [1.5, 0.5], [0.2, -0.1]]), square)
    assert inside.tolist() == [True, False, False]


def test_koch_region_lies_below_the_curve():
    partition = build_partition(Domain((0.0, 0.0), (1.0, 1.0)), [8, 8])
    region = gauss.koch_region(partition, depth=1)
    centers = np.array([partition.cell(c).center for c in region.cells])
    assert len(region) > 0
    assert np.all(centers[:, 1] < 0.35 + np.sqrt(3.0) / 6.0)
    # the whole bottom row is inside
    assert all(partition.cell_id((i, 0)) in region for i in range(8))


@pytest.mark.parametrize("make_region", [
    lambda p: gauss.disk_region(p),
    lambda p: gauss.koch_region(p, depth=2),
    lambda p: rasterize(p, lambda c: c[:, 0] < 0.5),
])
def test_gauss_identity_on_regions(square_level, make_region, rng):
    basis = square_level.basis
    A = make_region(basis.partition)
    for field in (gauss.coordinate_field(basis),
                  tuple(UltraFun(basis, rng.standard_normal(basis.size)) for _ in range(2))):
        report = gauss.gauss_check(field, A, square_level.operators, basis)
        assert report.passed(1e-9)
        assert report.perimeter >= 0.0


def test_normal_field_has_unit_length_on_the_boundary_layer(square_level):
    basis = square_level.basis
    A = gauss.disk_region(basis.partition)
    normals = gauss.normal_field(A, square_level.operators, basis)
    length = np.sqrt(sum(n.values ** 2 for n in normals))
    assert np.any(length > 0.0)
    assert np.allclose(length[length > 0.0], 1.0)


def test_empty_region_has_no_perimeter(square_level):
    empty = CellSet.of(square_level.partition, [])
    assert gauss.perimeter(empty, square_level.operators, square_level.basis) == 0.0


def test_perimeter_study_table():
    partition = build_partition(Domain((0.0, 0.0), (1.0, 1.0)), [2, 2])
    table, report = gauss.perimeter_study(partition, lambda p, i: rasterize(p, lambda c: c[:, 0] < 0.5), 2,
                                          region_name="cells")
    assert list(table.columns) == ["level", "cells", "gamma_size", "perimeter", "lhs", "residual"]
    assert table["cells"].tolist() == [4, 16]
    assert len(report.history) == 2
    assert report.region == "cells"
    assert (table["residual"] <= 1e-9 * (1.0 + table["lhs"].abs())).all()
    assert report.to_dict()["level"] == 1


def test_perimeter_of_one_interior_cell_in_1d():
    errors = []
    for n in (4, 8, 16):
        partition = build_partition(Domain((0.0,), (1.0,)), [n])
        level = build_level(partition, 2, 2)
        A = CellSet.of(partition, [int(0.3 * n)])
        errors.append(abs(gauss.perimeter(A, level.operators, level.basis) - 2.0))
    assert errors[-1] <= 0.2
    assert errors[-1] <= errors[0] + 1e-9


def test_perimeter_of_a_square_away_from_the_domain_boundary():
    # A = [0, 1/2]², perimeter 2, on cells of width 1/2 and 1/4
    coarse = build_partition(Domain((-1.0, -1.0), (1.5, 1.5)), [5, 5])
    errors, sizes = [], []
    for partition in (coarse, refine(coarse)):
        level = build_level(partition, 2, 4)
        A = rasterize(partition, lambda c: np.all((c > 0.0) & (c < 0.5), axis=1))
        sizes.append(len(A))
        errors.append(abs(gauss.perimeter(A, level.operators, level.basis) - 2.0))
    assert sizes == [1, 4]
    assert max(errors) <= 0.2
    assert errors[1] <= errors[0] + 1e-9
