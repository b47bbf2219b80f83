import numpy as np
import pytest
from hypothesis import given, strategies as st

from vrepfcm.homogenize import (
    RVE,
    DisconnectedTileError,
    ParametricTile,
    build_tile,
    effective_tensor,
    hill_mandel_check,
    laminate_normal_modulus,
    macro_load_case,
    rows_to_csv,
    sweep_rotations,
    upper_labels,
)
from vrepfcm.material import IsotropicMaterial, isotropic_to_voigt
from vrepfcm.membership import everywhere

from conftest import T1, T2

STEEL = IsotropicMaterial(21000.0, 0.3)


def tile_rve(d, material=STEEL, **kw):
    opts = dict(divisions=(4, 4, 4), p=2, depth=2)
    opts.update(kw)
    return RVE.from_tile(ParametricTile(d), material, **opts)


@pytest.fixture(scope="module")
def rod_tile():
    return effective_tensor(tile_rve((0.3, 0.2, 0.2)))


# ---------------------------------------------------------------------------
# tiles


def test_full_rods_fill_the_cube():
    m = build_tile(ParametricTile((1.0, 1.0, 1.0)))
    X = np.random.default_rng(0).uniform(0, 1, (500, 3))
    assert m(X).inside.all()


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0, 360))
def test_center_is_always_solid(a, b, c, rot):
    t = ParametricTile((a, b, c), rotation_deg=rot)
    assert t.membership()(np.full((1, 3), 0.5)).inside[0]


def test_thicker_x_rod_adds_solid():
    thin, thick = ParametricTile((0.2, 0.2, 0.2)), ParametricTile((0.4, 0.2, 0.2))
    assert thick.solid_fraction() > thin.solid_fraction()
    # the x rod alone: |y|, |z| <= 0.2 about the center
    X = np.random.default_rng(1).uniform(0, 1, (20000, 3))
    in_thick = thick.membership()(X).inside
    xrod = np.all(np.abs(X[:, 1:] - 0.5) <= 0.2, axis=1)
    yrod = np.all(np.abs(X[:, [0, 2]] - 0.5) <= 0.1, axis=1)
    assert (in_thick & xrod).sum() > (in_thick & yrod).sum()


@pytest.mark.parametrize("d", [(0.0, 0.2, 0.2), (0.3, -0.1, 0.2), (1.2, 0.2, 0.2)])
def test_tile_diameter_range(d):
    with pytest.raises(ValueError):
        build_tile(ParametricTile(d))


def test_disconnected_tile_is_rejected(monkeypatch):
    # two separated slabs stand in for a broken recipe
    t = ParametricTile((0.2, 0.2, 0.2))
    monkeypatch.setattr(ParametricTile, "_inside", lambda self, x: np.abs(np.atleast_2d(x)[:, 0] - 0.5) > 0.3)
    with pytest.raises(DisconnectedTileError):
        build_tile(t)


# ---------------------------------------------------------------------------
# load cases and the homogeneous identity


def test_macro_load_cases():
    np.testing.assert_array_equal(np.stack([macro_load_case(j) for j in range(6)]), np.eye(6))
    for j in (-1, 6):
        with pytest.raises(ValueError):
            macro_load_case(j)


def test_homogeneous_cell_has_no_fluctuation():
    res = effective_tensor(RVE(np.zeros(3), np.ones(3), everywhere(), STEEL, (2, 2, 2), 2, 0))
    np.testing.assert_allclose(np.asarray(res.tensor), np.asarray(isotropic_to_voigt(STEEL)), rtol=1e-10, atol=1e-9)
    X = np.random.default_rng(2).uniform(0, 1, (40, 3))
    for j in range(6):
        # total displacement is eps_M x exactly, so the periodic part vanishes
        assert np.abs(res.solution.evaluate(X, j)).max() < 1e-12
        assert hill_mandel_check(res, j) <= 1e-12


# ---------------------------------------------------------------------------
# rod tiles


def test_rod_tile_tensor_is_symmetric_positive_definite(rod_tile):
    C = np.asarray(rod_tile.tensor)
    assert rod_tile.asymmetry < 1e-6
    assert np.linalg.eigvalsh(C).min() > 0


def test_rod_tile_hill_mandel(rod_tile):
    assert rod_tile.gaps.max() <= 1e-6
    assert max(c.constraint_residual for c in rod_tile.cases) <= 1e-12


def test_broken_tying_is_flagged():
    # release the periodic tie on a patch of the x faces
    res = effective_tensor(tile_rve((0.3, 0.2, 0.2)), untie=(0, ((1, 3), (1, 3))))
    assert res.gaps.max() > 1e-3


def test_rod_tile_voigt_bound(rod_tile):
    phi = ParametricTile((0.3, 0.2, 0.2)).solid_fraction()
    upper = phi * np.linalg.eigvalsh(np.asarray(isotropic_to_voigt(STEEL)))
    # eigenvalues of C* lie below the volume-weighted solid (small Monte-Carlo slack on phi)
    assert np.all(np.linalg.eigvalsh(np.asarray(rod_tile.tensor)) <= upper * 1.01)


def test_effective_tensor_is_linear_in_the_modulus(rod_tile):
    scaled = effective_tensor(tile_rve((0.3, 0.2, 0.2), IsotropicMaterial(3 * STEEL.E, STEEL.nu)))
    np.testing.assert_allclose(np.asarray(scaled.tensor) / 3, np.asarray(rod_tile.tensor), rtol=1e-10,
                               atol=1e-10 * STEEL.E)


def test_equal_rods_give_cubic_symmetry():
    res = effective_tensor(tile_rve((0.25, 0.25, 0.25)))
    assert res.symmetry == "cubic"


def test_thicker_x_rod_stiffens_c11(rod_tile):
    C = np.asarray(rod_tile.tensor)
    assert C[0, 0] > 1.05 * C[1, 1]
    assert C[1, 1] == pytest.approx(C[2, 2], rel=1e-6)


def test_laminate_formula():
    assert laminate_normal_modulus(10.0, 1.0, 0.5) == pytest.approx(2 / 1.1)
    assert laminate_normal_modulus(4.0, 4.0, 0.3) == pytest.approx(4.0)


# ---------------------------------------------------------------------------
# rotation sweeps


def test_sweep_zero_row_is_the_input():
    rows = sweep_rotations(T2, [0.0, 30.0])
    iu = np.triu_indices(6)
    np.testing.assert_allclose([rows[0][k] for k in upper_labels()], T2[iu], rtol=1e-12)


@given(st.floats(0.0, 360.0))
def test_cubic_sweep_c14_opposes_c24(a):
    row = sweep_rotations(T1, [a])[0]
    assert row["C14"] == pytest.approx(-row["C24"], abs=1e-9 * T1.max())


def test_tetragonal_sweep_at_ninety_degrees():
    r0, r90 = sweep_rotations(T2, [0.0, 90.0])
    for a, b in (("C11", "C22"), ("C55", "C66"), ("C13", "C23")):
        assert r90[a] == pytest.approx(r0[b], rel=1e-9)


def test_sweep_csv_layout():
    text = rows_to_csv(sweep_rotations(T1, [0.0, 15.0, 30.0]))
    lines = text.splitlines()
    assert lines[0].split(",") == ["angle_deg"] + upper_labels()
    assert len(lines) == 4
    assert float(lines[2].split(",")[0]) == 15.0
