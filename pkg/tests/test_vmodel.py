import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from vrepfcm.vmodel import (
    NotWatertightError,
    TriBoundary,
    VModel,
    make_box,
    make_cylinder,
    make_sphere,
    model_of,
    point_inclusion_ray,
    tessellate,
)
from vrepfcm.spline_core import TrivariateSpline

CYL = make_cylinder(1.0, 2.0)
UNIT = model_of([TrivariateSpline.box()])
UNIT_TB = tessellate(UNIT, 2)


def in_box(x, lo, hi):
    return np.all((x >= lo) & (x <= hi), axis=1)


def test_cylinder_construction():
    assert len(CYL) == 5
    assert CYL.volume() == pytest.approx(2 * np.pi, rel=1e-3)
    assert all(c.spline.is_regular() for c in CYL.cells)


def test_cylinder_tessellation_closed():
    tb = tessellate(CYL, 16)
    assert tb.is_watertight()
    assert tb.volume() == pytest.approx(2 * np.pi, rel=2e-3)
    assert tb.area() == pytest.approx(6 * np.pi, rel=2e-3)


def test_sphere_volume_and_closure():
    sph = make_sphere(1.0)
    # polynomial patches interpolate the sphere, so the volume is approximate
    assert sph.volume() == pytest.approx(4 / 3 * np.pi, rel=5e-3)
    assert tessellate(sph, 8).is_watertight()


def test_stl_round_trip(tmp_path):
    tb = tessellate(CYL, 4)
    path = tmp_path / "c.stl"
    tb.write_stl(str(path))
    back = TriBoundary.read_stl(str(path), tol=1e-6)
    assert back.n_triangles == tb.n_triangles
    assert back.is_watertight()
    assert back.volume() == pytest.approx(tb.volume(), rel=1e-6)


def test_t_junction_is_rejected():
    vm = VModel((make_box((0, 0, 0), (1, 1, 1), 0), make_box((1, 0, 0), (2, 0.5, 1), 1)))
    with pytest.raises(NotWatertightError):
        tessellate(vm, 2)


@given(arrays(np.float64, (50, 3), elements=st.floats(-0.5, 1.5)), st.integers(0, 2**32 - 1))
def test_ray_parity_on_unit_cube(x, seed):
    # keep points off the faces, where either answer is admissible
    x = x[np.min(np.abs(np.concatenate([x, x - 1], axis=1)), axis=1) > 1e-9]
    got = point_inclusion_ray(UNIT_TB, x, seed)
    np.testing.assert_array_equal(got, in_box(x, 0, 1))


@pytest.mark.parametrize("engine", ["inverse", "ray"])
def test_engines_agree_with_analytic_cylinder(engine):
    X = np.random.default_rng(0).uniform([-1.2, -1.2, -0.2], [1.2, 1.2, 2.2], (2000, 3))
    r = np.hypot(X[:, 0], X[:, 1])
    analytic = (r <= 1) & (X[:, 2] >= 0) & (X[:, 2] <= 2)
    far = np.minimum.reduce([np.abs(r - 1), np.abs(X[:, 2]), np.abs(X[:, 2] - 2)]) > 5e-3
    got = CYL.membership(engine, **({"resolution": 16} if engine == "ray" else {}))(X).inside
    np.testing.assert_array_equal(got[far], analytic[far])


def test_inverse_reports_cells_and_params():
    X = np.array([[0.0, 0.0, 1.0], [0.9, 0.0, 0.5], [3.0, 0.0, 0.0]])
    hits = CYL.membership("inverse")(X)
    assert hits.inside.tolist() == [True, True, False]
    assert hits.cell[0] == 0 and hits.cell[1] != 0 and hits.cell[2] == -1
    for i in range(2):
        sp = CYL.cell(hits.cell[i]).spline
        np.testing.assert_allclose(sp.evaluate(hits.param[i])[:3], X[i], atol=1e-9)


@pytest.mark.parametrize("op", ["union", "intersection", "difference"])
@pytest.mark.parametrize("engine", ["inverse", "ray"])
def test_csg_boxes(op, engine):
    a = model_of([TrivariateSpline.box((0, 0, 0), (1, 1, 1))])
    b = model_of([TrivariateSpline.box((0.5, 0.5, 0.5), (1.5, 1.5, 1.5))])
    vm = getattr(a, op)(b)
    X = np.random.default_rng(1).uniform(-0.2, 1.7, (3000, 3))
    ia, ib = in_box(X, 0, 1), in_box(X, 0.5, 1.5)
    expect = {"union": ia | ib, "intersection": ia & ib, "difference": ia & ~ib}[op]
    grid = np.concatenate([X, X - 0.5, X - 1, X - 1.5], axis=1)
    far = np.min(np.abs(grid), axis=1) > 1e-6
    got = vm.membership(engine)(X).inside
    np.testing.assert_array_equal(got[far], expect[far])


def test_model_json_round_trip():
    vm = CYL.difference(model_of([TrivariateSpline.box((-0.2, -0.2, -1), (0.2, 0.2, 3))]))
    back = VModel.from_dict(json.loads(vm.to_json()))
    X = np.random.default_rng(2).uniform(-1, 1, (500, 3)) + [0, 0, 1]
    np.testing.assert_array_equal(back.membership()(X).inside, vm.membership()(X).inside)


def test_distance_to_tessellation():
    d = UNIT_TB.distance(np.array([[0.5, 0.5, 2.0], [0.5, 0.5, 0.5], [2.0, 2.0, 0.5]]))
    np.testing.assert_allclose(d, [1.0, 0.5, np.sqrt(2)], atol=1e-12)


def test_unknown_engine():
    with pytest.raises(ValueError):
        CYL.membership("voxel")
