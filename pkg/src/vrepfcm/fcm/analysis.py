"""Finite cell analyses: assembly of elasticity and heat systems, solves and fields."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from ..membership import Hits, everywhere
from .assembly import (
    Accumulator,
    LowerPattern,
    cell_shape,
    element_conductivity,
    element_stiffness,
    lower_matvec,
    strain_operator,
)
from .basis import shape_3d
from .boundary import (
    HeatDirichlet,
    HeatFlux,
    Neumann,
    PenaltyDirichlet,
    SurfacePoints,
    support_points,
)
from .materials import MaterialModel, as_material
from .mesh import FiniteCellMesh
from .quadrature import INSIDE, Indicator, QuadratureSet, integrate_mesh
from .solver import Factorization, NumericalError, relative_residual

log = logging.getLogger(__name__)

# beta = PENALTY_FACTOR * E_max / h_min; inside the plateau of a beta sweep on the
# graded cuboid, where larger factors lose accuracy to conditioning
PENALTY_FACTOR = 1e5
VOIGT_IDENTITY = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


def _indicator(ind) -> Indicator:
    if ind is None:
        return Indicator(everywhere(), 8.0)
    if isinstance(ind, Indicator):
        return ind
    return Indicator(ind)


def discretize(mesh: FiniteCellMesh, indicator=None, depth: int = 4, order: int | None = None) -> QuadratureSet:
    """Cell classification plus composed quadrature for the whole mesh."""
    return integrate_mesh(mesh, _indicator(indicator).membership, depth, order)


def _reference_values(quad: QuadratureSet, phys_vals: np.ndarray, phys_idx: np.ndarray):
    """Per-cell reference property: value at the physical point nearest the cell center.

    Cells without physical points take the reference of the nearest cell that has one.
    """
    mesh = quad.mesh
    nc = mesh.n_cells
    centers = mesh.cell_centers()
    cell_of = np.repeat(np.arange(nc), np.diff(quad.ptr))
    ref_idx = np.full(nc, -1)
    if len(phys_idx):
        pc = cell_of[phys_idx]
        d = np.linalg.norm(quad.x[phys_idx] - centers[pc], axis=1)
        order = np.lexsort((d, pc))
        first = np.ones(len(order), dtype=bool)
        first[1:] = pc[order[1:]] != pc[order[:-1]]
        ref_idx[pc[order[first]]] = order[first]
    have = np.flatnonzero(ref_idx >= 0)
    ref = np.zeros((nc,) + phys_vals.shape[1:])
    if len(have) == 0:
        if len(phys_vals):
            ref[:] = phys_vals.mean(axis=0)
        return ref
    ref[have] = phys_vals[ref_idx[have]]
    missing = np.flatnonzero(ref_idx < 0)
    if len(missing):
        from scipy.spatial import cKDTree

        _, nn = cKDTree(centers[have]).query(centers[missing])
        ref[missing] = ref[have[nn]]
    return ref


@dataclass
class LinearSystem:
    """Assembled system ``K u = f`` with ``K = K_phys + alpha K_fict + K_pen`` (lower CSC)."""

    kind: str
    mesh: FiniteCellMesh
    quad: QuadratureSet
    indicator: Indicator
    material: MaterialModel
    pattern: LowerPattern
    parts: dict
    rhs: np.ndarray
    beta: float
    fixed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    fixed_values: np.ndarray | None = None
    ref: np.ndarray | None = None
    thermal: object = None
    theta_ref: float = 0.0
    timings: dict = field(default_factory=dict)

    @property
    def ncomp(self) -> int:
        return 3 if self.kind == "elastic" else 1

    @property
    def n(self) -> int:
        return self.pattern.N

    @property
    def alpha(self) -> float:
        return self.indicator.alpha_out

    def matrix(self, alpha: float | None = None) -> sps.csc_matrix:
        a = self.alpha if alpha is None else alpha
        data = a * self.parts["fict"]
        data += self.parts["phys"]
        if "pen" in self.parts:
            data += self.parts["pen"]
        return self.pattern.matrix(data)

    def with_q(self, q: float) -> "LinearSystem":
        """Same system with a different fictitious-domain exponent (no reassembly)."""
        from dataclasses import replace

        return replace(self, indicator=self.indicator.with_q(q))


def _penalty_beta(scale: float, mesh: FiniteCellMesh) -> float:
    return PENALTY_FACTOR * scale / float(mesh.h.min())


def _group_surface(mesh: FiniteCellMesh, sp: SurfacePoints):
    cells, xi = mesh.locate(sp.x)
    order = np.argsort(cells, kind="stable")
    cells, xi, w, x = cells[order], xi[order], sp.w[order], sp.x[order]
    bounds = np.flatnonzero(np.diff(cells)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [len(cells)]])
    for s, e in zip(starts, ends):
        if e > s:
            yield int(cells[s]), xi[s:e], w[s:e], x[s:e]


def assemble_elasticity(
    mesh: FiniteCellMesh,
    indicator=None,
    material=None,
    bcs=(),
    depth: int = 4,
    quad: QuadratureSet | None = None,
    body_force=None,
    thermal=None,
    theta_ref: float = 0.0,
    beta: float | None = None,
    fixed=None,
    rhs_strains: np.ndarray | None = None,
    fixed_values=None,
) -> LinearSystem:
    """Stiffness (phys / fictitious / penalty parts) and load vector.

    ``thermal`` is a heat :class:`SolutionField` on the same mesh; its
    temperature enters as prestrain ``alpha_th (theta - theta_ref) I``.
    ``rhs_strains`` (``(6, k)``) adds load cases ``-int B^T C eps`` for
    homogenization with a periodic fluctuation field.  ``fixed`` dofs are
    eliminated and take ``fixed_values`` (zero by default).
    """
    t0 = time.perf_counter()
    ind = _indicator(indicator)
    material = as_material(material)
    quad = quad if quad is not None else discretize(mesh, ind, depth)
    if quad.mesh is not mesh:
        raise ValueError("quadrature belongs to a different mesh")
    if thermal is not None and thermal.mesh is not mesh and (
        thermal.mesh.divisions != mesh.divisions or thermal.mesh.p != mesh.p
    ):
        raise ValueError("thermal field lives on a different mesh")
    gd = mesh.vector_dofs(3)
    pattern = LowerPattern(mesh.scalar_dofs, 3, mesh.n_scalar)
    acc = Accumulator(pattern, ("phys", "fict", "pen"))
    nrhs = 1 if rhs_strains is None else np.atleast_2d(rhs_strains).shape[1]
    f = np.zeros((pattern.N, nrhs))

    phys_idx = np.flatnonzero(quad.phys)
    hits = quad.hits.subset(phys_idx)
    C_phys = np.ascontiguousarray(material.stiffness(quad.x[phys_idx], hits))
    if len(phys_idx) == 0:
        raise ValueError("no quadrature point lies in the physical domain")
    ref = _reference_values(quad, C_phys, phys_idx)
    C0 = C_at = None
    if material.uniform:
        C0 = np.array(C_phys[0])
    else:
        C_at = np.empty((quad.n_points, 6, 6))
        C_at[phys_idx] = C_phys
    del C_phys
    eth = None
    if thermal is not None:
        cells_q = np.repeat(np.arange(mesh.n_cells), np.diff(quad.ptr))
        theta = thermal.values_at(cells_q[phys_idx], quad.xi[phys_idx])[:, 0]
        a_th = material.expansion(quad.x[phys_idx], hits)
        eth = np.zeros(quad.n_points)
        eth[phys_idx] = a_th * (theta - theta_ref)
    bf = None
    if body_force is not None:
        bf = body_force(quad.x) if callable(body_force) else np.broadcast_to(np.asarray(body_force, float), (quad.n_points, 3))
    eps_m = None if rhs_strains is None else np.atleast_2d(np.asarray(rhs_strains, dtype=float)).reshape(6, nrhs)

    cache = {}
    for c in range(mesh.n_cells):
        sl = quad.cell_slice(c)
        xi, w, ph = quad.xi[sl], quad.w[sl], quad.phys[sl]
        uncut = quad.classes[c] != 2
        key = (int(quad.classes[c]),) if (material.uniform and uncut and eth is None and bf is None) else None
        if key is not None and key in cache:
            Kp, Kf, fe = cache[key]
        else:
            _, G = cell_shape(mesh, xi)
            B = strain_operator(G)
            Kp = Kf = None
            fe = np.zeros((B.shape[2], nrhs))
            if ph.any():
                C = np.broadcast_to(C0, (int(ph.sum()), 6, 6)) if C0 is not None else C_at[sl][ph]
                Bp = B[ph]
                Kp = element_stiffness(Bp, C, w[ph])
                if eth is not None:
                    sig = np.einsum("nij,j->ni", C, VOIGT_IDENTITY) * (eth[sl][ph] * w[ph])[:, None]
                    fe[:, 0] += np.einsum("nik,ni->k", Bp, sig)
                if eps_m is not None:
                    sig = np.einsum("nij,jk->nik", C * w[ph][:, None, None], eps_m)
                    fe -= np.einsum("nij,nik->jk", Bp, sig)
            if (~ph).any():
                Cr = np.broadcast_to(ref[c], (int((~ph).sum()), 6, 6))
                Bf = B[~ph]
                Kf = element_stiffness(Bf, Cr, w[~ph])
                if eps_m is not None:
                    sig = np.einsum("nij,jk->nik", Cr * (ind.alpha_out * w[~ph])[:, None, None], eps_m)
                    fe -= np.einsum("nij,nik->jk", Bf, sig)
            if bf is not None:
                N, _ = shape_3d(xi, mesh.p, derivs=False)
                a = np.where(ph, 1.0, ind.alpha_out) * w
                fb = np.einsum("na,nc->ac", N, bf[sl] * a[:, None]).reshape(-1)
                fe[:, 0] += fb
            if key is not None:
                cache[key] = (Kp, Kf, fe)
        g = gd[c]
        if Kp is not None:
            acc.add("phys", c, g, Kp)
        if Kf is not None:
            acc.add("fict", c, g, Kf)
        np.add.at(f, g, fe)

    scale = None
    if beta is None and any(isinstance(b, PenaltyDirichlet) and b.beta is None for b in bcs):
        sample = phys_idx[:: max(1, len(phys_idx) // 4000)]
        scale = material.young_scale(quad.x[sample], quad.hits.subset(sample))
        beta = _penalty_beta(scale, mesh)
    beta_used = beta
    for bc in bcs:
        sp = support_points(bc.support, mesh)
        if isinstance(bc, PenaltyDirichlet):
            b = bc.beta if bc.beta is not None else beta
            beta_used = b
            comps = list(bc.components)
            for c, xi, w, x in _group_surface(mesh, sp):
                N, _ = shape_3d(xi, mesh.p, derivs=False)
                M = (N * w[:, None]).T @ N
                nl = N.shape[1]
                Ke = np.zeros((3 * nl, 3 * nl))
                fe = np.zeros(3 * nl)
                g = bc.values(x)
                for k, comp in enumerate(comps):
                    Ke[comp::3, comp::3] += b * M
                    fe[comp::3] += b * (N * w[:, None]).T @ g[:, k]
                acc.add("pen", c, gd[c], Ke)
                np.add.at(f[:, 0], gd[c], fe)
        elif isinstance(bc, Neumann):
            for c, xi, w, x in _group_surface(mesh, sp):
                N, _ = shape_3d(xi, mesh.p, derivs=False)
                t = bc.values(x)
                fe = ((N * w[:, None]).T @ t).reshape(-1)
                np.add.at(f[:, 0], gd[c], fe)
        else:
            raise TypeError(f"{type(bc).__name__} is not an elasticity boundary condition")

    if fixed is None:
        fixed = np.zeros(0, dtype=np.int64)
    pattern.release()
    sysm = LinearSystem(
        "elastic", mesh, quad, ind, material, pattern, acc.data,
        f[:, 0] if nrhs == 1 and rhs_strains is None else f,
        beta_used if beta_used is not None else 0.0,
        np.asarray(fixed, dtype=np.int64),
        None if fixed_values is None else np.broadcast_to(np.asarray(fixed_values, dtype=float), np.shape(fixed)).copy(),
        ref, thermal, theta_ref,
    )
    sysm.timings["assemble"] = time.perf_counter() - t0
    return sysm


def assemble_heat(
    mesh: FiniteCellMesh,
    indicator=None,
    material=None,
    bcs=(),
    depth: int = 4,
    quad: QuadratureSet | None = None,
    source=None,
    beta: float | None = None,
) -> LinearSystem:
    """Steady conduction ``-div(kappa grad theta) = s`` with penalty temperatures."""
    t0 = time.perf_counter()
    ind = _indicator(indicator)
    material = as_material(material)
    quad = quad if quad is not None else discretize(mesh, ind, depth)
    gd = mesh.scalar_dofs
    pattern = LowerPattern(gd, 1, mesh.n_scalar)
    acc = Accumulator(pattern, ("phys", "fict", "pen"))
    f = np.zeros(pattern.N)
    phys_idx = np.flatnonzero(quad.phys)
    hits = quad.hits.subset(phys_idx)
    kap = np.zeros(quad.n_points)
    kp = material.conductivity(quad.x[phys_idx], hits)
    kap[phys_idx] = kp
    ref = _reference_values(quad, kp, phys_idx)
    src = None
    if source is not None:
        src = source(quad.x) if callable(source) else np.full(quad.n_points, float(source))
    for c in range(mesh.n_cells):
        sl = quad.cell_slice(c)
        xi, w, ph = quad.xi[sl], quad.w[sl], quad.phys[sl]
        N, G = cell_shape(mesh, xi)
        if ph.any():
            acc.add("phys", c, gd[c], element_conductivity(G[ph], kap[sl][ph], w[ph]))
        if (~ph).any():
            acc.add("fict", c, gd[c], element_conductivity(G[~ph], np.full(int((~ph).sum()), ref[c]), w[~ph]))
        if src is not None:
            a = np.where(ph, 1.0, ind.alpha_out) * w
            np.add.at(f, gd[c], N.T @ (src[sl] * a))
    if beta is None and any(isinstance(b, HeatDirichlet) and b.beta is None for b in bcs):
        beta = _penalty_beta(float(np.max(kp)), mesh)
    for bc in bcs:
        sp = support_points(bc.support, mesh)
        if isinstance(bc, HeatDirichlet):
            b = bc.beta if bc.beta is not None else beta
            for c, xi, w, x in _group_surface(mesh, sp):
                N, _ = shape_3d(xi, mesh.p, derivs=False)
                acc.add("pen", c, gd[c], b * (N * w[:, None]).T @ N)
                np.add.at(f, gd[c], b * (N * w[:, None]).T @ bc.values(x))
        elif isinstance(bc, HeatFlux):
            for c, xi, w, x in _group_surface(mesh, sp):
                N, _ = shape_3d(xi, mesh.p, derivs=False)
                np.add.at(f, gd[c], (N * w[:, None]).T @ bc.values(x))
        else:
            raise TypeError(f"{type(bc).__name__} is not a heat boundary condition")
    pattern.release()
    sysm = LinearSystem("heat", mesh, quad, ind, material, pattern, acc.data, f, beta or 0.0, ref=ref)
    sysm.timings["assemble"] = time.perf_counter() - t0
    return sysm


# ---------------------------------------------------------------------------
# solve


def _rigid_modes(mesh: FiniteCellMesh) -> list[np.ndarray]:
    modes = []
    for k in range(3):
        b = np.zeros(3)
        b[k] = 1.0
        modes.append(mesh.interpolate_affine(np.zeros((3, 3)), b))
    for i, j in ((0, 1), (1, 2), (0, 2)):
        A = np.zeros((3, 3))
        A[i, j], A[j, i] = -1.0, 1.0
        modes.append(mesh.interpolate_affine(A))
    return modes


def diagnose(system: LinearSystem) -> str:
    msg = [
        f"alpha={system.alpha:.3e} (q={system.indicator.q:g}), beta={system.beta:.3e}, dofs={system.n}",
    ]
    if system.kind == "elastic" and not any(system.mesh.periodic) and system.n <= 2_000_000:
        K = system.matrix()
        knorm = abs(K).max()
        worst = []
        names = ("tx", "ty", "tz", "rz", "rx", "ry")
        for nm, r in zip(names, _rigid_modes(system.mesh)):
            r = r.copy()
            r[system.fixed] = 0.0
            val = np.linalg.norm(lower_matvec(K, r)) / (knorm * np.linalg.norm(r))
            worst.append((val, nm))
        worst.sort()
        msg.append(
            "rigid-body energy ratios: " + ", ".join(f"{nm}={v:.1e}" for v, nm in worst)
        )
        if worst[0][0] < 1e-12:
            msg.append(f"mode {worst[0][1]} is unconstrained")
    return "; ".join(msg)


def solve(
    system: LinearSystem, method: str = "auto", factorization: Factorization | None = None, refine: int = 3
) -> "SolutionField":
    """Direct sparse solve; raises :class:`NumericalError` with a diagnostic on failure."""
    t0 = time.perf_counter()
    K = system.matrix()
    f = system.rhs
    n = system.n
    free = None
    lift = None
    if len(system.fixed):
        mask = np.ones(n, dtype=bool)
        mask[system.fixed] = False
        free = np.flatnonzero(mask)
        if system.fixed_values is not None and np.any(system.fixed_values):
            lift = np.zeros(n)
            lift[system.fixed] = system.fixed_values
            Kl = lower_matvec(K, lift)
            f = f - (Kl if np.ndim(f) == 1 else Kl[:, None])
        K = K[free][:, free]
        f = f[free]
    try:
        F = factorization or Factorization(K, method)
    except NumericalError as exc:
        raise NumericalError(f"{exc}; {diagnose(system)}") from exc
    t1 = time.perf_counter()
    x = F.solve(f)
    res = relative_residual(K, x, f)
    # penalty and fictitious scaling make K ill-conditioned; refine iteratively
    for _ in range(refine):
        if res <= 1e-12:
            break
        x = x + F.solve(f - lower_matvec(K, x))
        new = relative_residual(K, x, f)
        if new >= res:
            break
        res = new
    if free is not None:
        u = np.zeros((n,) + np.shape(f)[1:])
        u[free] = x
        if lift is not None:
            u[system.fixed] = system.fixed_values if u.ndim == 1 else system.fixed_values[:, None]
    else:
        u = x
    sol = SolutionField(system, u, res)
    sol.timings = dict(system.timings, factor=t1 - t0, solve=time.perf_counter() - t1)
    sol.factorization = F
    sol.backward_error = _backward_error(K, x, f)
    if not res <= 1e-6:
        raise NumericalError(f"solve failed: relative residual {res:.2e}; {diagnose(system)}")
    if not res <= 1e-10:
        sol.warnings.append(
            f"relative residual {res:.2e} above 1e-10 (normwise backward error {sol.backward_error:.1e})"
        )
        log.warning(sol.warnings[-1])
    return sol


def _backward_error(K, x, f) -> float:
    """``|r|_inf / (|K|_inf |x|_inf + |f|_inf)``: residual relative to its roundoff floor scale."""
    r = lower_matvec(K, x) - f
    A = abs(K)
    knorm = float(np.max(A @ np.ones(K.shape[0]) + A.T @ np.ones(K.shape[0]) - A.diagonal()))
    return float(np.max(np.abs(r)) / (knorm * np.max(np.abs(x)) + np.max(np.abs(f))))


# ---------------------------------------------------------------------------
# solution fields


def von_mises(sig: np.ndarray) -> np.ndarray:
    s = np.atleast_2d(sig)
    s11, s22, s33, s12, s23, s13 = s.T
    return np.sqrt(
        0.5 * ((s11 - s22) ** 2 + (s22 - s33) ** 2 + (s33 - s11) ** 2)
        + 3.0 * (s12**2 + s23**2 + s13**2)
    )


class SolutionField:
    """Coefficient vector with evaluators for primary and derived fields."""

    def __init__(self, system: LinearSystem, u: np.ndarray, residual: float = 0.0):
        self.system = system
        self.u = u
        self.residual = residual
        self.backward_error = 0.0
        self.warnings: list[str] = []
        self.timings: dict = {}
        self.factorization = None

    @property
    def mesh(self) -> FiniteCellMesh:
        return self.system.mesh

    @property
    def ncomp(self) -> int:
        return self.system.ncomp

    def _coeffs(self, cells: np.ndarray, column: int = 0) -> np.ndarray:
        u = self.u if self.u.ndim == 1 else self.u[:, column]
        g = self.mesh.scalar_dofs[cells]
        nc = self.ncomp
        return u[(nc * g[..., None] + np.arange(nc))]

    def values_at(self, cells, xi, column: int = 0) -> np.ndarray:
        N, _ = shape_3d(np.atleast_2d(xi), self.mesh.p, derivs=False)
        return np.einsum("na,nac->nc", N, self._coeffs(np.asarray(cells), column))

    def gradients_at(self, cells, xi, column: int = 0) -> np.ndarray:
        """``(n, ncomp, 3)`` physical gradients."""
        _, G = cell_shape(self.mesh, np.atleast_2d(xi))
        return np.einsum("nda,nac->ncd", G, self._coeffs(np.asarray(cells), column))

    def evaluate(self, x, column: int = 0) -> np.ndarray:
        cells, xi = self.mesh.locate(x)
        v = self.values_at(cells, xi, column)
        return v[:, 0] if self.ncomp == 1 else v

    def gradient(self, x, column: int = 0) -> np.ndarray:
        cells, xi = self.mesh.locate(x)
        g = self.gradients_at(cells, xi, column)
        return g[:, 0] if self.ncomp == 1 else g

    # -- elasticity -------------------------------------------------------

    def strain(self, x, column: int = 0) -> np.ndarray:
        return _voigt_strain(self.gradient(x, column))

    def thermal_strain(self, x, hits: Hits) -> np.ndarray:
        s = self.system
        out = np.zeros((len(x), 6))
        if s.thermal is None:
            return out
        theta = s.thermal.evaluate(x)
        inside = hits.inside
        if inside.any():
            a = s.material.expansion(x[inside], hits.subset(np.flatnonzero(inside)))
            out[inside] = (a * (theta[inside] - s.theta_ref))[:, None] * VOIGT_IDENTITY
        return out

    def stiffness_at(self, x, hits: Hits | None = None) -> np.ndarray:
        s = self.system
        x = np.atleast_2d(x)
        hits = hits if hits is not None else s.indicator.membership(x)
        C = np.empty((len(x), 6, 6))
        ins = np.flatnonzero(hits.inside)
        out = np.flatnonzero(~hits.inside)
        if len(ins):
            C[ins] = s.material.stiffness(x[ins], hits.subset(ins))
        if len(out):
            cells, _ = self.mesh.locate(x[out])
            C[out] = s.alpha * s.ref[cells]
        return C

    def stress(self, x, column: int = 0) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        hits = self.system.indicator.membership(x)
        eps = self.strain(x, column) - self.thermal_strain(x, hits)
        return np.einsum("nij,nj->ni", self.stiffness_at(x, hits), eps)

    def von_mises(self, x, column: int = 0) -> np.ndarray:
        return von_mises(self.stress(x, column))

    def strain_energy(self, column: int = 0) -> float:
        """``1/2 int_phys (eps - eps_th) : C : (eps - eps_th)`` by the analysis quadrature."""
        s = self.system
        if s.kind != "elastic":
            raise ValueError("strain energy needs an elasticity solution")
        q = s.quad
        idx = np.flatnonzero(q.phys)
        cells = np.repeat(np.arange(self.mesh.n_cells), np.diff(q.ptr))[idx]
        total = 0.0
        for chunk in np.array_split(np.arange(len(idx)), max(1, len(idx) // 20000)):
            ii = idx[chunk]
            eps = _voigt_strain(self.gradients_at(cells[chunk], q.xi[ii], column))
            hits = q.hits.subset(ii)
            if s.thermal is not None:
                theta = s.thermal.values_at(cells[chunk], q.xi[ii])[:, 0]
                a = s.material.expansion(q.x[ii], hits)
                eps = eps - (a * (theta - s.theta_ref))[:, None] * VOIGT_IDENTITY
            C = s.material.stiffness(q.x[ii], hits)
            total += 0.5 * float(np.einsum("n,ni,nij,nj->", q.w[ii], eps, C, eps))
        return total

    def energy_from_matrix(self, column: int = 0) -> float:
        """``1/2 u^T K_phys u`` (no thermal prestrain)."""
        s = self.system
        u = self.u if self.u.ndim == 1 else self.u[:, column]
        Kp = s.pattern.matrix(s.parts["phys"])
        return 0.5 * float(u @ lower_matvec(Kp, u))

    # -- heat ---------------------------------------------------------------

    def temperature(self, x) -> np.ndarray:
        return self.evaluate(x)

    def flux(self, x) -> np.ndarray:
        """Heat flux ``-kappa grad theta`` (physical conductivity, alpha outside)."""
        s = self.system
        x = np.atleast_2d(np.asarray(x, dtype=float))
        hits = s.indicator.membership(x)
        k = np.empty(len(x))
        ins = np.flatnonzero(hits.inside)
        out = np.flatnonzero(~hits.inside)
        if len(ins):
            k[ins] = s.material.conductivity(x[ins], hits.subset(ins))
        if len(out):
            cells, _ = self.mesh.locate(x[out])
            k[out] = s.alpha * s.ref[cells]
        return -k[:, None] * self.gradient(x)


def _voigt_strain(G: np.ndarray) -> np.ndarray:
    """Voigt strain (engineering shear) from displacement gradients ``(n, 3, 3)``."""
    e = np.empty((len(G), 6))
    e[:, 0] = G[:, 0, 0]
    e[:, 1] = G[:, 1, 1]
    e[:, 2] = G[:, 2, 2]
    e[:, 3] = G[:, 0, 1] + G[:, 1, 0]
    e[:, 4] = G[:, 1, 2] + G[:, 2, 1]
    e[:, 5] = G[:, 0, 2] + G[:, 2, 0]
    return e


def thermo_elastic(
    mesh: FiniteCellMesh,
    indicator,
    material,
    theta: SolutionField,
    theta_ref: float,
    bcs=(),
    depth: int = 4,
    quad: QuadratureSet | None = None,
    **kw,
) -> SolutionField:
    """One-way coupled elasticity solve with thermal prestrain from ``theta``."""
    if theta.system.kind != "heat":
        raise ValueError("theta must be a heat solution")
    if theta.mesh.divisions != mesh.divisions or theta.mesh.p != mesh.p or not np.allclose(theta.mesh.lo, mesh.lo) or not np.allclose(theta.mesh.hi, mesh.hi):
        raise ValueError("temperature field and elasticity mesh do not match")
    quad = quad if quad is not None else theta.system.quad
    sysm = assemble_elasticity(mesh, indicator, material, bcs, depth, quad, thermal=theta, theta_ref=theta_ref, **kw)
    return solve(sysm)


__all__ = [
    "LinearSystem",
    "SolutionField",
    "NumericalError",
    "assemble_elasticity",
    "assemble_heat",
    "discretize",
    "solve",
    "thermo_elastic",
    "von_mises",
    "INSIDE",
]
