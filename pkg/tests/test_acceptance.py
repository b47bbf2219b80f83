"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL verdict line."""

import time

import numpy as np
import pytest

from vrepfcm.fcm import (
    FiniteCellMesh,
    Graded,
    HeatDirichlet,
    Neumann,
    PenaltyDirichlet,
    assemble_elasticity,
    assemble_heat,
    solve,
    thermo_elastic,
)
from vrepfcm.homogenize import RVE, ParametricTile, effective_tensor, laminate_normal_modulus
from vrepfcm.material import (
    POROUS_SILICA,
    TITANIUM,
    IsotropicMaterial,
    classify_symmetry,
    fit_least_squares,
    gibson_ashby,
    isotropic_to_voigt,
    porous,
    rotate_tensor,
)
from vrepfcm.membership import Membership, box_membership, everywhere
from vrepfcm.spline_core import TrivariateSpline
from vrepfcm.vmodel import make_cylinder, tessellate

from conftest import T1, T2, T3

# ---------------------------------------------------------------------------
# 1. material fit of the graded cuboid

MU_E = np.array([100000, 131438, 185772, 46415, 46415, 185772, 131438, 100000], dtype=float)


def graded_cuboid():
    sp = TrivariateSpline.box((0, 0, 0), (1, 1, 3)).degree_elevate(2, 3)
    for t in (0.2, 0.4, 0.6, 0.8):
        sp = sp.knot_insert(2, t)
    return sp


def young(x):
    return 1e5 + 5e4 * np.sin(np.pi * x[:, 2])


def test_c01_material_fit(verdict):
    sp = graded_cuboid()
    assert sp.knots[2].values.tolist() == [0, 0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1, 1, 1, 1]
    t0 = time.perf_counter()
    mu = fit_least_squares(sp, young, 100)
    dt = time.perf_counter() - t0
    err = np.abs(mu - MU_E[None, None, :]).max()
    verdict("C1 material fit", err <= 0.5 and dt < 1.0, f"max |mu - ref| = {err:.3f}, {dt:.2f} s")


# ---------------------------------------------------------------------------
# 2 and 12. convergence of the embedded cuboid and the alpha sweep

CUBOID = ((0.0, 0.0, 0.0), (1.0, 1.0, 3.0))


def cuboid_problem():
    F = TrivariateSpline.box(*CUBOID).boundary_faces()
    mat = Graded(young, 0.3)
    bcs = [
        PenaltyDirichlet(F["u0"], (0,)),
        PenaltyDirichlet(F["v0"], (1,)),
        PenaltyDirichlet(F["w0"], (2,)),
        Neumann(F["w1"], [0.0, 0.0, -1000.0]),
    ]
    return mat, bcs


@pytest.fixture(scope="module")
def convergence_run():
    mat, bcs = cuboid_problem()
    t0 = time.perf_counter()
    ref_mesh = FiniteCellMesh(np.zeros(3), np.array([1.0, 1.0, 3.0]), (2, 2, 6), 6)
    e_ref = solve(assemble_elasticity(ref_mesh, everywhere(), mat, bcs, depth=0)).strain_energy()
    energies, q_energies = {}, {}
    for p in (1, 2, 3, 4):
        mesh = FiniteCellMesh.around(*CUBOID, 0.1, (6, 6, 16), p)
        system = assemble_elasticity(mesh, box_membership(*CUBOID), mat, bcs, depth=4)
        energies[p] = solve(system).strain_energy()
        if p == 4:
            # alpha = 10^-q reuses the assembled physical and fictitious parts
            for q in (6.0, 8.0, 10.0):
                q_energies[q] = energies[p] if q == 8.0 else solve(system.with_q(q)).strain_energy()
        del system
    return e_ref, energies, q_energies, time.perf_counter() - t0


@pytest.mark.slow
def test_c02_convergence(convergence_run, verdict):
    e_ref, energies, _, dt = convergence_run
    err = {p: abs(e - e_ref) / abs(e_ref) for p, e in energies.items()}
    seq = [err[p] for p in sorted(err)]
    mono = all(b < a for a, b in zip(seq, seq[1:]))
    detail = ", ".join(f"p={p}: {e:.2e}" for p, e in sorted(err.items())) + f"; {dt:.0f} s"
    verdict("C2 convergence", mono and err[4] <= 1e-4 and dt < 600, detail)


@pytest.mark.slow
def test_c12_alpha_sweep(convergence_run, verdict):
    _, _, qe, _ = convergence_run
    drift = max(abs(e - qe[8.0]) / abs(qe[8.0]) for e in qe.values())
    verdict("C12 alpha sweep", drift <= 1e-5, f"max relative drift over q in {{6,8,10}} = {drift:.2e}")


# ---------------------------------------------------------------------------
# 3. patch test


@pytest.mark.parametrize("p", [1, 2, 3])
def test_c03_patch(p, verdict):
    A = np.array([[1e-3, 2e-4, 0], [0, -5e-4, 1e-4], [3e-4, 0, 2e-3]])
    b = np.array([1e-3, 0, -2e-3])
    mat = IsotropicMaterial(1000.0, 0.3)
    mesh = FiniteCellMesh(np.zeros(3), np.ones(3), (2, 2, 2), p)
    # boundary dofs take the interpolant of the affine field (strongly, so no penalty consistency error)
    fixed = mesh.boundary_dofs(3)
    values = mesh.interpolate_affine(A, b)[fixed]
    sol = solve(assemble_elasticity(mesh, everywhere(), mat, (), depth=0, fixed=fixed, fixed_values=values))
    x = np.random.default_rng(p).uniform(0, 1, (200, 3))
    assert np.abs(sol.evaluate(x) - (x @ A.T + b)).max() <= 1e-13
    eps = np.array([A[0, 0], A[1, 1], A[2, 2], A[0, 1] + A[1, 0], A[1, 2] + A[2, 1], A[0, 2] + A[2, 0]])
    exact = 0.5 * eps @ np.asarray(isotropic_to_voigt(mat)) @ eps
    err = abs(sol.strain_energy() - exact) / exact
    verdict(f"C3 patch test p={p}", err <= 1e-10, f"energy error {err:.1e}")


# ---------------------------------------------------------------------------
# 4. membership engines on the five-patch cylinder


def test_c04_membership(verdict):
    t0 = time.perf_counter()
    cyl = make_cylinder(1.0, 2.0)
    lo, hi = cyl.bbox
    X = np.random.default_rng(4).uniform(lo, hi, (10_000, 3))
    r = np.hypot(X[:, 0], X[:, 1])
    analytic = (r <= 1.0) & (X[:, 2] >= 0.0) & (X[:, 2] <= 2.0)
    dist = np.minimum.reduce([np.abs(r - 1.0), np.abs(X[:, 2]), np.abs(X[:, 2] - 2.0)])
    # the quadratic spline arcs interpolate the circle; their own deviation widens the band
    U = np.random.default_rng(5).uniform(0, 1, (4000, 2))
    dev = max(np.abs(np.hypot(*c.spline.evaluate(np.c_[U[:, 0], np.ones(len(U)), U[:, 1]])[:, :2].T) - 1).max()
              for c in cyl.cells[1:])
    S = np.concatenate([c.spline.evaluate(np.c_[U[:, 0], np.ones(len(U)), U[:, 1]]) for c in cyl.cells[1:]])

    inside = cyl.membership("inverse")(X).inside
    bad = inside != analytic
    ok = bool(np.all(dist[bad] <= dev + cyl.tol_geom))
    frac = {}
    for res in (8, 16, 32):
        sag = tessellate(cyl, res).distance(S).max()
        ray = cyl.membership("ray", resolution=res)(X).inside
        bad = ray != analytic
        frac[res] = bad.mean()
        ok &= bool(np.all(dist[bad] <= sag + dev + cyl.tol_geom))
    halves = all(frac[2 * r] <= 0.5 * frac[r] for r in (8, 16))
    dt = time.perf_counter() - t0
    detail = ", ".join(f"res {k}: {v:.2%}" for k, v in frac.items()) + f"; {dt:.1f} s"
    verdict("C4 membership", ok and frac[16] < 1e-3 and halves and dt < 30, detail)


# ---------------------------------------------------------------------------
# 5. porous scaling


def test_c05_gibson_ashby(verdict):
    g = gibson_ashby(0.7)
    solid = IsotropicMaterial(634.0 / 0.09, 0.17)
    scaled = porous(solid, 0.7).E
    ok = g["E_r"] == pytest.approx(0.09, abs=1e-15) and abs(g["kappa_r"] - 0.164317) <= 1e-6
    ok &= abs(scaled - POROUS_SILICA.E) <= 1e-9 * POROUS_SILICA.E
    verdict("C5 Gibson-Ashby", ok, f"E_r={g['E_r']:.12g}, kappa_r={g['kappa_r']:.7f}, scaled E={scaled:.6f}")


# ---------------------------------------------------------------------------
# 6 and 10. paper tensors


def test_c06_bond_rotation(verdict):
    R = np.asarray(rotate_tensor(T2, 90.0))
    I0 = np.asarray(rotate_tensor(T2, 0.0))
    swaps = [((0, 0), (1, 1)), ((4, 4), (5, 5)), ((0, 2), (1, 2))]
    ok = True
    for a, b in swaps:
        ok &= abs(R[a] - T2[b]) <= 1e-9 * abs(T2[b]) and abs(R[b] - T2[a]) <= 1e-9 * abs(T2[a])
    ok &= abs(R[2, 2] - T2[2, 2]) <= 1e-9 * T2[2, 2] and abs(R[3, 3] - T2[3, 3]) <= 1e-9 * T2[3, 3]
    ok &= abs(R[0, 1] - T2[0, 1]) <= 1e-9 * T2[0, 1]
    ok &= np.abs(I0 - T2).max() <= 1e-9 * np.abs(T2).max()
    verdict("C6 bond rotation", bool(ok), f"C11'={R[0, 0]:.2f}, C22'={R[1, 1]:.2f}, C55'={R[4, 4]:.2f}, C66'={R[5, 5]:.2f}")


def test_c10_symmetry_classes(verdict):
    got = [classify_symmetry(C, 1e-4) for C in (T1, T2, T3)]
    verdict("C10 symmetry classes", got == ["cubic", "tetragonal", "tetragonal"], ", ".join(got))


# ---------------------------------------------------------------------------
# 7, 8 and 9. homogenization

STEEL = IsotropicMaterial(21000.0, 0.3)  # 210 GPa


def test_c07_solid_rve(verdict):
    t0 = time.perf_counter()
    res = effective_tensor(RVE(np.zeros(3), np.ones(3), everywhere(), STEEL, (6, 6, 6), 3))
    C0 = np.asarray(isotropic_to_voigt(STEEL))
    err = np.abs(np.asarray(res.tensor) - C0).max() / np.abs(C0).max()
    dt = time.perf_counter() - t0
    ok = err <= 1e-4 and res.gaps.max() <= 1e-6 and dt < 120
    verdict("C7 solid RVE", ok, f"rel error {err:.1e}, max Hill-Mandel gap {res.gaps.max():.1e}, {dt:.1f} s")


def test_c08_laminate(verdict):
    t0 = time.perf_counter()
    # phase B = phase A / 10 via the fictitious weight alpha = 10^-1
    rve = RVE(np.zeros(3), np.ones(3), Membership(lambda x: x[:, 2] <= 0.5), STEEL, (4, 4, 4), 2, q=1.0)
    C = np.asarray(effective_tensor(rve).tensor)
    c33 = np.asarray(isotropic_to_voigt(STEEL))[2, 2]
    exact = laminate_normal_modulus(c33, 0.1 * c33, 0.5)
    err = abs(C[2, 2] - exact) / exact
    dt = time.perf_counter() - t0
    verdict("C8 laminate", err <= 0.02 and dt < 120, f"C33={C[2, 2]:.2f} vs {exact:.2f} (rel {err:.1e}), {dt:.1f} s")


def test_c09_rotated_tile(verdict):
    t0 = time.perf_counter()
    base = effective_tensor(RVE.from_tile(ParametricTile((0.4, 0.2, 0.2)), TITANIUM)).tensor
    rot = np.asarray(effective_tensor(RVE.from_tile(ParametricTile((0.4, 0.2, 0.2), rotation_deg=90.0), TITANIUM)).tensor)
    R = np.asarray(rotate_tensor(base, 90.0))
    big = np.abs(R) > 0.01 * np.abs(R).max()
    err = (np.abs(rot - R)[big] / np.abs(R)[big]).max()
    dt = time.perf_counter() - t0
    verdict("C9 rotated tile", err <= 0.02 and dt < 300, f"max rel deviation {err:.1e}, {dt:.1f} s")


# ---------------------------------------------------------------------------
# 11. heat and thermo-elastic properties


def test_c11a_graded_slab_flux(verdict):
    # kappa = 1/(1+x) admits the quadratic exact temperature ((1+x)^2 - 1)/3
    F = TrivariateSpline.box().boundary_faces()
    mat = Graded(1.0, 0.3, kappa=lambda x: 1.0 / (1.0 + x[:, 0]))
    mesh = FiniteCellMesh(np.zeros(3), np.ones(3), (3, 2, 2), 2)
    sol = solve(assemble_heat(mesh, everywhere(), mat, [HeatDirichlet(F["u0"], 0.0), HeatDirichlet(F["u1"], 1.0)], depth=0))
    q = sol.flux(np.random.default_rng(0).uniform(0, 1, (500, 3)))[:, 0]
    var = np.ptp(q) / abs(q.mean())
    verdict("C11 graded slab flux", var <= 1e-6, f"relative flux variation {var:.1e}, mean {q.mean():.9f}")


def test_c11b_clamped_bar(verdict):
    L = np.array([2.0, 1.0, 1.0])
    F = TrivariateSpline.box((0, 0, 0), L).boundary_faces()
    mat = Graded(TITANIUM.E, TITANIUM.nu, kappa=TITANIUM.kappa, alpha_th=TITANIUM.alpha_th)
    mesh = FiniteCellMesh(np.zeros(3), L, (2, 1, 1), 2)
    theta = solve(assemble_heat(mesh, everywhere(), mat, [HeatDirichlet(F[k], 120.0) for k in F], depth=0))
    # supports lie on cell faces of an uncut mesh, so a stiff penalty costs no
    # conditioning and keeps its O(1/beta) inconsistency below the tolerance
    beta = 1e8 * TITANIUM.E / 1.0
    bcs = [PenaltyDirichlet(F["u0"], (0,), beta=beta), PenaltyDirichlet(F["u1"], (0,), beta=beta),
           PenaltyDirichlet(F["v0"], (1,), beta=beta), PenaltyDirichlet(F["w0"], (2,), beta=beta)]
    u = thermo_elastic(mesh, everywhere(), mat, theta, 20.0, bcs, depth=0)
    sig = u.stress(np.random.default_rng(1).uniform(0, 1, (100, 3)) * L)
    exact = -TITANIUM.E * TITANIUM.alpha_th * 100.0
    err = max(np.abs(sig[:, 0] - exact).max(), np.abs(sig[:, 1:]).max()) / abs(exact)
    verdict("C11 clamped bar", err <= 1e-6, f"sigma_xx={sig[:, 0].mean():.9f} vs {exact:.9f} (rel {err:.1e})")


def _profile(kind):
    """Silica fraction over the thickness: step at z=1.25 or a ramp over [0.75, 1.75]."""

    def s(x):
        z = x[:, 2]
        if kind == "discontinuous":
            return (z > 1.25).astype(float)
        t = np.clip(z - 0.75, 0.0, 1.0)
        return t if kind == "C0" else t * t * (3 - 2 * t)

    return s


def _mix(a, b, s):
    return lambda x: a + (b - a) * s(x)


def test_c11c_graded_interface_analog(verdict):
    t0 = time.perf_counter()
    L = np.array([8.0, 8.0, 5.0])
    F = TrivariateSpline.box((0, 0, 0), L).boundary_faces()
    zs = np.linspace(0.0025, 4.9975, 1000)
    line = np.c_[np.full_like(zs, 4.0), np.full_like(zs, 4.0), zs]
    below, above = np.array([[4.0, 4.0, 1.25 - 1e-9]]), np.array([[4.0, 4.0, 1.25 + 1e-9]])
    peak, jump = {}, {}
    for kind in ("discontinuous", "C0", "C1"):
        s = _profile(kind)
        mat = Graded(_mix(TITANIUM.E, POROUS_SILICA.E, s), _mix(TITANIUM.nu, POROUS_SILICA.nu, s),
                     kappa=_mix(TITANIUM.kappa, POROUS_SILICA.kappa, s),
                     alpha_th=_mix(TITANIUM.alpha_th, POROUS_SILICA.alpha_th, s))
        # cell faces at z = 1.25 so the step sits on an element interface
        mesh = FiniteCellMesh(np.zeros(3), L, (4, 4, 16), 3)
        theta = solve(assemble_heat(mesh, everywhere(), mat, [HeatDirichlet(F["w1"], 1000.0), HeatDirichlet(F["w0"], 20.0)], depth=0))
        u = thermo_elastic(mesh, everywhere(), mat, theta, 20.0, [PenaltyDirichlet(F["w0"])], depth=0)
        vm = u.von_mises(line)
        peak[kind] = vm.max()
        jump[kind] = abs(u.von_mises(below) - u.von_mises(above))[0] / peak[kind]
    dt = time.perf_counter() - t0
    ok = jump["discontinuous"] > 0.25 and jump["C0"] < 0.05 and jump["C1"] < 0.05
    ok &= peak["C0"] < peak["discontinuous"] and peak["C1"] < peak["discontinuous"]
    detail = ", ".join(f"{k}: peak {peak[k]:.4f}, jump {jump[k]:.3f}" for k in peak) + f"; {dt:.0f} s"
    verdict("C11 graded interface analog", ok and dt < 300, detail)
