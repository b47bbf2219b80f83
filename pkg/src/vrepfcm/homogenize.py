"""Periodic homogenization of unit tiles: six macro load cases, effective tensors, Hill-Mandel."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from .fcm.analysis import LinearSystem, SolutionField, assemble_elasticity, discretize
from .fcm.assembly import cell_shape
from .fcm.materials import MaterialModel, as_material
from .fcm.mesh import FiniteCellMesh
from .fcm.quadrature import Indicator
from .fcm.solver import Factorization
from .material.tensors import ElasticityTensor, classify_symmetry, rotate_tensor
from .membership import Membership, as_membership

VOIGT_LABELS = ("11", "22", "33", "12", "23", "13")


# ---------------------------------------------------------------------------
# tiles


@dataclass(frozen=True)
class ParametricTile:
    """Cubic unit tile with three axis rods of square cross-section through the face centers.

    ``diameters`` are the rod widths along x, y and z; ``rotation_deg``
    rotates the tile geometry about the z axis through its center.
    """

    diameters: tuple[float, float, float]
    size: float = 1.0
    rotation_deg: float = 0.0
    unit: str = "mm"

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(3), np.full(3, float(self.size))

    def _inside(self, x: np.ndarray) -> np.ndarray:
        c = 0.5 * self.size
        y = np.atleast_2d(x) - c
        if self.rotation_deg:
            a = np.radians(self.rotation_deg)
            ca, sa = np.cos(a), np.sin(a)
            # pull back through the inverse rotation
            y = np.column_stack([ca * y[:, 0] + sa * y[:, 1], -sa * y[:, 0] + ca * y[:, 1], y[:, 2]])
        h = 0.5 * np.asarray(self.diameters, dtype=float)
        tol = 1e-12 * self.size
        ay = np.abs(y)
        rx = (ay[:, 1] <= h[0] + tol) & (ay[:, 2] <= h[0] + tol)
        ry = (ay[:, 0] <= h[1] + tol) & (ay[:, 2] <= h[1] + tol)
        rz = (ay[:, 0] <= h[2] + tol) & (ay[:, 1] <= h[2] + tol)
        return rx | ry | rz

    def membership(self) -> Membership:
        return Membership(self._inside)

    def solid_fraction(self, n: int = 200_000, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        return float(self._inside(rng.uniform(0, self.size, (n, 3))).mean())


class DisconnectedTileError(ValueError):
    pass


def build_tile(tile: ParametricTile, check_resolution: int = 40) -> Membership:
    """Validated membership of the tile solid (connectivity by a voxel flood fill)."""
    d = np.asarray(tile.diameters, dtype=float)
    if d.shape != (3,) or np.any(d <= 0) or np.any(d > tile.size):
        raise ValueError("rod diameters must be positive and not exceed the box edge")
    n = check_resolution
    t = (np.arange(n) + 0.5) / n * tile.size
    X = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    vox = tile._inside(X).reshape(n, n, n)
    _, ncomp = ndimage.label(vox)
    if ncomp != 1:
        raise DisconnectedTileError(f"tile solid has {ncomp} connected components")
    return tile.membership()


# ---------------------------------------------------------------------------
# periodic spaces


class UntiedMesh(FiniteCellMesh):
    """Periodic mesh in which some tied dofs on the ``+`` face of one direction are released.

    ``region`` gives cell index ranges ``((a0, a1), (b0, b1))`` on that face
    (in the two remaining directions, cyclic order); seam functions whose
    support lies inside the region get their own dofs on the ``+`` side.
    Used as a negative control for the Hill-Mandel check.
    """

    def __init__(self, base: FiniteCellMesh, direction: int, region):
        super().__init__(base.lo, base.hi, base.divisions, base.p, base.periodic)
        if not base.periodic[direction]:
            raise ValueError("only a periodic direction can be untied")
        object.__setattr__(self, "direction", int(direction))
        object.__setattr__(self, "region", tuple(tuple(int(v) for v in r) for r in region))

    @cached_property
    def _untied(self):
        d = self.direction
        a, b = (d + 1) % 3, (d + 2) % 3
        base = super().scalar_dofs
        n_base = int(np.prod(self.sizes_1d))
        ijk = self.cell_ijk(np.arange(self.n_cells))
        p = self.p
        loc = np.stack(np.meshgrid(np.arange(p + 1), np.arange(p + 1), np.arange(p + 1), indexing="ij"), -1)
        loc = np.transpose(loc, (2, 1, 0, 3)).reshape(-1, 3)  # local index x fastest
        maps = self.maps_1d

        def inside_1d(axis, f_local, cell_idx, rng):
            # support of a 1D function: vertex -> two cells, mode -> its cell
            lo_, hi_ = rng
            n = self.divisions[axis]
            if f_local >= 2:
                return lo_ <= cell_idx < hi_
            v = cell_idx + f_local  # vertex index (unwrapped)
            cells = [(v - 1) % n, v % n] if self.periodic[axis] else [c for c in (v - 1, v) if 0 <= c < n]
            return all(lo_ <= c < hi_ for c in cells)

        out = base.copy()
        new_ids: dict[int, int] = {}
        plus = np.flatnonzero(ijk[:, d] == self.divisions[d] - 1)
        for c in plus:
            for k, (lx, ly, lz) in enumerate(loc):
                l = (lx, ly, lz)
                if l[d] != 1:
                    continue
                if inside_1d(a, l[a], ijk[c, a], self.region[0]) and inside_1d(b, l[b], ijk[c, b], self.region[1]):
                    g = int(base[c, k])
                    if g not in new_ids:
                        new_ids[g] = n_base + len(new_ids)
                    out[c, k] = new_ids[g]
        return out, n_base + len(new_ids)

    @property
    def scalar_dofs(self) -> np.ndarray:
        return self._untied[0]

    @property
    def n_scalar(self) -> int:
        return self._untied[1]


def apply_periodic(mesh: FiniteCellMesh, pairs=(0, 1, 2), untie=None) -> FiniteCellMesh:
    """Periodic fluctuation space: opposite faces of the listed directions share dofs.

    Tying by identification eliminates the ``+`` face dofs exactly, so
    ``u(x+) - u(x-) = eps_M (x+ - x-)`` holds to round-off for the total
    field ``u = eps_M x + w``.  ``untie = (direction, region)`` releases part
    of one face (see :class:`UntiedMesh`).
    """
    per = [False, False, False]
    for d in pairs:
        per[int(d)] = True
    m = FiniteCellMesh(mesh.lo, mesh.hi, mesh.divisions, mesh.p, tuple(per))
    if untie is not None:
        m = UntiedMesh(m, *untie)
    return m


def corner_dofs(mesh: FiniteCellMesh) -> np.ndarray:
    """Vector dofs of the lower box corner (all corners coincide when fully periodic)."""
    s = mesh.vertex_dof_scalar((0, 0, 0))
    return 3 * s + np.arange(3)


# ---------------------------------------------------------------------------
# RVE and results


@dataclass
class RVE:
    """Unit cell ``[lo, hi]`` with a solid membership, base material and mesh settings."""

    lo: np.ndarray
    hi: np.ndarray
    membership: object
    material: object
    divisions: tuple[int, int, int] = (6, 6, 6)
    p: int = 3
    depth: int = 4
    q: float = 8.0

    @classmethod
    def from_tile(cls, tile: ParametricTile, material, divisions=(10, 10, 10), p=2, depth=4, q=8.0):
        lo, hi = tile.box
        return cls(lo, hi, build_tile(tile), material, divisions, p, depth, q)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def mesh(self) -> FiniteCellMesh:
        return FiniteCellMesh(self.lo, self.hi, self.divisions, self.p)


def macro_load_case(j: int) -> np.ndarray:
    """Unit macro strain in Voigt slot ``j`` (engineering shear)."""
    if not 0 <= j < 6:
        raise ValueError("load case index must be in 0..5")
    e = np.zeros(6)
    e[j] = 1.0
    return e


@dataclass
class CaseResult:
    macro_strain: np.ndarray
    mean_strain: np.ndarray
    mean_stress: np.ndarray
    mean_energy_density: float  # <sigma : eps>
    constraint_residual: float = 0.0

    @property
    def hill_mandel_gap(self) -> float:
        ref = float(self.mean_stress @ self.mean_strain)
        return abs(self.mean_energy_density - ref) / abs(ref)


@dataclass
class HomogenizationResult:
    tensor: ElasticityTensor
    raw: np.ndarray
    cases: list[CaseResult]
    symmetry: str
    n_dofs: int
    n_points: int
    timings: dict = field(default_factory=dict)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([c.hill_mandel_gap for c in self.cases])

    @property
    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.raw - self.raw.T)) / np.max(np.abs(self.raw)))


def _point_stiffness(system: LinearSystem, idx: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """alpha-weighted stiffness at quadrature points ``idx``."""
    q = system.quad
    C = np.empty((len(idx), 6, 6))
    ph = q.phys[idx]
    if ph.any():
        sel = idx[ph]
        C[ph] = system.material.stiffness(q.x[sel], q.hits.subset(sel))
    if (~ph).any():
        C[~ph] = system.alpha * system.ref[cells[~ph]]
    return C


def _averages(system: LinearSystem, sol: SolutionField, eps_m: np.ndarray, column: int, volume: float):
    q = system.quad
    cells_all = np.repeat(np.arange(system.mesh.n_cells), np.diff(q.ptr))
    n = q.n_points
    s_eps = np.zeros(6)
    s_sig = np.zeros(6)
    s_en = 0.0
    for chunk in np.array_split(np.arange(n), max(1, n // 20000)):
        cells = cells_all[chunk]
        G = sol.gradients_at(cells, q.xi[chunk], column)
        eps = np.empty((len(chunk), 6))
        eps[:, 0], eps[:, 1], eps[:, 2] = G[:, 0, 0], G[:, 1, 1], G[:, 2, 2]
        eps[:, 3] = G[:, 0, 1] + G[:, 1, 0]
        eps[:, 4] = G[:, 1, 2] + G[:, 2, 1]
        eps[:, 5] = G[:, 0, 2] + G[:, 2, 0]
        eps += eps_m
        C = _point_stiffness(system, chunk, cells)
        sig = np.einsum("nij,nj->ni", C, eps)
        w = q.w[chunk]
        s_eps += w @ eps
        s_sig += w @ sig
        s_en += float(np.einsum("n,ni,ni->", w, sig, eps))
    return s_eps / volume, s_sig / volume, s_en / volume


def _seam_residual(sol: SolutionField, mesh: FiniteCellMesh, column: int, n: int = 7) -> float:
    """max |w(x+) - w(x-)| over sample points of the tied face pairs."""
    t = (np.arange(n) + 0.5) / n
    worst = 0.0
    for d in range(3):
        if not mesh.periodic[d]:
            continue
        a, b = (d + 1) % 3, (d + 2) % 3
        A, B = np.meshgrid(t, t, indexing="ij")
        P = np.zeros((n * n, 3))
        P[:, a] = mesh.lo[a] + A.ravel() * (mesh.hi[a] - mesh.lo[a])
        P[:, b] = mesh.lo[b] + B.ravel() * (mesh.hi[b] - mesh.lo[b])
        Pm, Pp = P.copy(), P.copy()
        Pm[:, d], Pp[:, d] = mesh.lo[d], mesh.hi[d]
        worst = max(worst, float(np.max(np.abs(sol.evaluate(Pp, column) - sol.evaluate(Pm, column)))))
    return worst


def effective_tensor(rve: RVE, pairs=(0, 1, 2), untie=None, method: str = "auto") -> HomogenizationResult:
    """Effective stiffness from six unit macro strains sharing one factorization.

    Column ``j`` is the box-averaged stress (alpha-weighted, voids count
    with the fictitious stiffness) under unit macro strain ``j``.
    """
    t0 = time.perf_counter()
    mesh = apply_periodic(rve.mesh(), pairs, untie)
    ind = Indicator(as_membership(rve.membership), rve.q)
    material = as_material(rve.material)
    quad = discretize(mesh, ind, rve.depth)
    system = assemble_elasticity(
        mesh, ind, material, (), quad=quad, fixed=corner_dofs(mesh), rhs_strains=np.eye(6)
    )
    t1 = time.perf_counter()
    from .fcm.analysis import solve

    sol = solve(system, method)
    t2 = time.perf_counter()
    raw = np.zeros((6, 6))
    cases = []
    for j in range(6):
        em = macro_load_case(j)
        e, s, en = _averages(system, sol, em, j, rve.volume)
        raw[:, j] = s
        cases.append(CaseResult(em, e, s, en, _seam_residual(sol, mesh, j)))
    C = 0.5 * (raw + raw.T)
    tensor = ElasticityTensor(C, getattr(rve.material, "unit", "kN/cm^2"))
    res = HomogenizationResult(
        tensor, raw, cases, classify_symmetry(C), system.n, quad.n_points,
        {"assemble": t1 - t0, "solve": t2 - t1, "average": time.perf_counter() - t2},
    )
    res.solution = sol
    return res


def hill_mandel_check(result: HomogenizationResult, case: int) -> float:
    """``|<sigma:eps> - <sigma>:<eps>| / |<sigma>:<eps>|`` for one solved case."""
    return result.cases[case].hill_mandel_gap


# ---------------------------------------------------------------------------
# rotation sweeps


def upper_labels() -> list[str]:
    return [f"C{i + 1}{j + 1}" for i in range(6) for j in range(i, 6)]


def sweep_rotations(C, angles) -> list[dict]:
    """Rows ``{angle_deg, C11, C12, ..., C66}`` of ``rotate_tensor(C, angle)``."""
    iu = np.triu_indices(6)
    labels = upper_labels()
    rows = []
    for a in angles:
        R = np.asarray(rotate_tensor(C, float(a)))
        row = {"angle_deg": float(a)}
        row.update({k: float(v) for k, v in zip(labels, R[iu])})
        rows.append(row)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def laminate_normal_modulus(c33_a: float, c33_b: float, frac_a: float) -> float:
    """Normal-to-layer effective C33 of a laminate with uniform in-plane strain (harmonic mean)."""
    return 1.0 / (frac_a / c33_a + (1.0 - frac_a) / c33_b)
