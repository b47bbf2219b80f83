import numpy as np
import pytest
from hypothesis import given, strategies as st

from vrepfcm.fcm import (
    CUT,
    INSIDE,
    OUTSIDE,
    FiniteCellMesh,
    Graded,
    HeatDirichlet,
    HeatFlux,
    Neumann,
    NumericalError,
    PenaltyDirichlet,
    assemble_elasticity,
    assemble_heat,
    classify_cells,
    discretize,
    export_fields,
    read_vtk,
    solve,
    surface_points,
)
from vrepfcm.fcm.basis import shape_1d
from vrepfcm.material import IsotropicMaterial
from vrepfcm.membership import Membership, box_membership, everywhere
from vrepfcm.spline_core import TrivariateSpline
from vrepfcm.vmodel import make_cylinder

MAT = IsotropicMaterial(1000.0, 0.3, kappa=2.0)
UNIT = TrivariateSpline.box()
FACES = UNIT.boundary_faces()


@given(st.integers(1, 8), st.floats(-1.0, 1.0))
def test_shape_functions_partition_unity_by_vertex_modes(p, xi):
    N, D = shape_1d(np.array([xi]), p)
    assert N[0, 0] + N[0, 1] == pytest.approx(1.0)
    # bubble modes vanish at the vertices
    Ne, _ = shape_1d(np.array([-1.0, 1.0]), p)
    assert np.all(np.abs(Ne[:, 2:]) < 1e-14)


def test_cell_classification():
    mesh = FiniteCellMesh.around((0, 0, 0), (1, 1, 1), 0.25, (3, 3, 3), 1)
    cls = classify_cells(mesh, box_membership((0, 0, 0), (1, 1, 1)))
    assert (cls == INSIDE).sum() == 1 and (cls == OUTSIDE).sum() == 0 and (cls == CUT).sum() == 26


@pytest.mark.parametrize("depth", [0, 2, 4])
def test_aligned_volume_is_exact(depth):
    mesh = FiniteCellMesh.around((0, 0, 0), (1, 1, 1), 0.25, (3, 3, 3), 2)
    quad = discretize(mesh, box_membership((0, 0, 0), (1, 1, 1)), max(depth, 1))
    assert quad.physical_volume() == pytest.approx(1.0, rel=1e-12)


def test_octree_volume_converges_for_curved_boundary():
    cyl = make_cylinder(1.0, 1.0)
    mesh = FiniteCellMesh.around(*cyl.bbox, 0.1, (4, 4, 2), 2)
    m = cyl.membership("inverse")
    err = [abs(discretize(mesh, m, d).physical_volume() - cyl.volume()) for d in (1, 3)]
    assert err[1] < 0.5 * err[0]


def test_surface_points_area():
    mesh = FiniteCellMesh(np.zeros(3), np.ones(3), (3, 2, 2), 2)
    sp = surface_points(FACES["w1"], mesh)
    assert sp.w.sum() == pytest.approx(1.0, rel=1e-13)


def embedded_bar(p, q=8.0, depth=3):
    """Cuboid [0,1]^3 under uniaxial traction, symmetry supports."""
    mesh = FiniteCellMesh.around((0, 0, 0), (1, 1, 1), 0.25, (3, 3, 3), p)
    bcs = [
        PenaltyDirichlet(FACES["u0"], (0,)),
        PenaltyDirichlet(FACES["v0"], (1,)),
        PenaltyDirichlet(FACES["w0"], (2,)),
        Neumann(FACES["w1"], [0.0, 0.0, 10.0]),
    ]
    return assemble_elasticity(mesh, box_membership((0, 0, 0), (1, 1, 1)), MAT, bcs, depth=depth)


def test_embedded_uniaxial_tension():
    sol = solve(embedded_bar(2))
    x = np.random.default_rng(0).uniform(0.05, 0.95, (50, 3))
    sig = sol.stress(x)
    np.testing.assert_allclose(sig[:, 2], 10.0, rtol=1e-5)
    np.testing.assert_allclose(sol.von_mises(x), 10.0, rtol=1e-5)
    exact = 0.5 * 10.0**2 / MAT.E
    assert sol.strain_energy() == pytest.approx(exact, rel=1e-6)
    assert sol.energy_from_matrix() == pytest.approx(exact, rel=1e-6)


def test_with_q_matches_reassembly():
    base = embedded_bar(2, depth=2)
    a = solve(base.with_q(6.0)).strain_energy()
    b = embedded_bar(2, depth=2)
    b = solve(b.with_q(6.0)).strain_energy()
    assert a == b
    assert base.with_q(6.0).alpha == pytest.approx(1e-6)


def test_unconstrained_system_is_diagnosed():
    mesh = FiniteCellMesh(np.zeros(3), np.ones(3), (1, 1, 1), 1)
    system = assemble_elasticity(mesh, everywhere(), MAT, [Neumann(FACES["w1"], [0, 0, 1.0])], depth=0)
    with pytest.raises(NumericalError, match="unconstrained|rigid"):
        solve(system)


def test_heat_flux_boundary_condition():
    # inflow q on x=0, fixed temperature on x=1: T = T1 + q (1 - x) / kappa
    # (aligned support, so a stiff penalty is harmless and its 1/beta offset negligible)
    mesh = FiniteCellMesh(np.zeros(3), np.ones(3), (2, 1, 1), 2)
    sol = solve(assemble_heat(mesh, everywhere(), MAT, [HeatFlux(FACES["u0"], 4.0), HeatDirichlet(FACES["u1"], 5.0, beta=1e10)], depth=0))
    x = np.random.default_rng(1).uniform(0, 1, (20, 3))
    np.testing.assert_allclose(sol.temperature(x), 5.0 + 4.0 * (1 - x[:, 0]) / 2.0, atol=1e-6)


def test_graded_material_enters_stiffness():
    mesh = FiniteCellMesh(np.zeros(3), np.ones(3), (1, 1, 2), 1)
    soft = Graded(lambda x: np.where(x[:, 2] < 0.5, 1000.0, 500.0), 0.0)
    bcs = [PenaltyDirichlet(FACES["w0"], beta=1e12), Neumann(FACES["w1"], [0, 0, 1.0])]
    sol = solve(assemble_elasticity(mesh, everywhere(), soft, bcs, depth=0))
    # series springs: top displacement 0.5/1000 + 0.5/500 (nu = 0, lateral faces free)
    assert sol.evaluate(np.array([[0.5, 0.5, 1.0]]))[0, 2] == pytest.approx(1.5e-3, rel=1e-6)


def test_vtk_round_trip(tmp_path):
    sol = solve(embedded_bar(1, depth=1))
    path = tmp_path / "f.vtk"
    data = export_fields(sol, str(path), shape=(4, 5, 6))
    back = read_vtk(str(path))
    assert back["shape"] == (4, 5, 6)
    for name in ("alpha", "displacement", "von_mises"):
        a, b = np.asarray(data["fields"][name]), np.asarray(back["fields"][name])
        assert np.array_equal(np.isnan(a), np.isnan(b))
        assert np.array_equal(a[~np.isnan(a)], b[~np.isnan(b)])


def test_mesh_validation():
    with pytest.raises(ValueError):
        FiniteCellMesh(np.zeros(3), np.zeros(3), (1, 1, 1), 1)
    with pytest.raises(ValueError):
        FiniteCellMesh(np.zeros(3), np.ones(3), (1, 0, 1), 1)
    with pytest.raises(ValueError):
        FiniteCellMesh(np.zeros(3), np.ones(3), (1, 1, 1), 0)


def test_boundary_dofs_cover_the_trace():
    mesh = FiniteCellMesh(np.zeros(3), np.ones(3), (2, 3, 2), 3)
    fixed = mesh.boundary_dofs(1)
    u = np.zeros(mesh.n_scalar)
    u[np.setdiff1d(np.arange(mesh.n_scalar), fixed)] = np.random.default_rng(2).normal(size=mesh.n_scalar - len(fixed))
    # a field built only from interior dofs vanishes on every face
    from vrepfcm.fcm.analysis import SolutionField

    sys_ = assemble_heat(mesh, everywhere(), MAT, (), depth=0)
    x = np.random.default_rng(3).uniform(0, 1, (30, 3))
    for d in range(3):
        for v in (0.0, 1.0):
            y = x.copy()
            y[:, d] = v
            assert np.abs(SolutionField(sys_, u).evaluate(y)).max() < 1e-13


def test_membership_wraps_booleans():
    m = Membership(lambda x: x[:, 0] > 0)
    assert m(np.array([[1.0, 0, 0], [-1.0, 0, 0]])).inside.tolist() == [True, False]
    assert len(m(np.zeros((0, 3)))) == 0
