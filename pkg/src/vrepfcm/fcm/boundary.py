"""Boundary supports, surface quadrature and boundary-condition records."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..spline_core import SurfaceSpline
from .basis import gauss_1d
from .mesh import FiniteCellMesh


@dataclass(frozen=True)
class TriangleSet:
    """Explicit triangulated support (e.g. a subset of a tessellated boundary)."""

    vertices: np.ndarray
    triangles: np.ndarray


@dataclass
class SurfacePoints:
    x: np.ndarray
    w: np.ndarray

    def __len__(self):
        return len(self.w)

    @property
    def area(self) -> float:
        return float(self.w.sum())


def _cell_coord(mesh: FiniteCellMesh, x: np.ndarray) -> np.ndarray:
    return (x - mesh.lo) / mesh.h


def _separable_axes(srf: SurfaceSpline, tol: float = 1e-12):
    """For each physical axis, the parameter direction it depends on (or None if constant).

    Returns ``None`` when some coordinate depends on both parameters.
    """
    P = srf.ctrl[..., :3]
    scale = max(float(np.ptp(P.reshape(-1, 3), axis=0).max()), 1e-300)
    dep = []
    for a in range(3):
        vs = np.ptp(P[..., a], axis=0).max() > tol * scale  # varies with s
        vt = np.ptp(P[..., a], axis=1).max() > tol * scale  # varies with t
        if vs and vt:
            return None
        dep.append(0 if vs else (1 if vt else None))
    return dep


def _crossings(srf: SurfaceSpline, direction: int, axis: int, mesh: FiniteCellMesh, n_probe: int = 64):
    """Parameter values where the (single-parameter) coordinate ``axis`` meets cell planes."""
    kv = srf.knots[direction]
    a, b = kv.domain
    t = np.linspace(a, b, n_probe * max(1, len(kv.breakpoints)))
    pp = np.zeros((len(t), 2))
    pp[:, direction] = t
    pp[:, 1 - direction] = srf.knots[1 - direction].domain[0]
    c = _cell_coord(mesh, srf.evaluate(pp)[:, :3])[:, axis]
    out = []
    for i in range(len(t) - 1):
        lo_, hi_ = sorted((c[i], c[i + 1]))
        for k in range(int(np.floor(lo_)) + 1, int(np.ceil(hi_))):
            # bisection on the monotone piece
            ta, tb = t[i], t[i + 1]
            fa = c[i] - k
            for _ in range(60):
                tm = 0.5 * (ta + tb)
                pp1 = np.zeros((1, 2))
                pp1[0, direction] = tm
                pp1[0, 1 - direction] = srf.knots[1 - direction].domain[0]
                fm = _cell_coord(mesh, srf.evaluate(pp1)[:, :3])[0, axis] - k
                if np.sign(fm) == np.sign(fa):
                    ta, fa = tm, fm
                else:
                    tb = tm
            out.append(0.5 * (ta + tb))
    return out


def _rule_on_rects(srf: SurfaceSpline, s_cuts, t_cuts, order: int) -> SurfacePoints:
    g, gw = gauss_1d(order)
    sa, sb = np.asarray(s_cuts[:-1]), np.asarray(s_cuts[1:])
    ta, tb = np.asarray(t_cuts[:-1]), np.asarray(t_cuts[1:])
    S = (0.5 * (sb - sa)[:, None] * (g + 1) + sa[:, None]).ravel()
    WS = (0.5 * (sb - sa)[:, None] * gw).ravel()
    T = (0.5 * (tb - ta)[:, None] * (g + 1) + ta[:, None]).ravel()
    WT = (0.5 * (tb - ta)[:, None] * gw).ravel()
    SS, TT = np.meshgrid(S, T, indexing="ij")
    W2 = np.outer(WS, WT).ravel()
    pts = np.column_stack([SS.ravel(), TT.ravel()])
    X, D = srf.derivatives(pts)
    jac = np.linalg.norm(np.cross(D[:, 0], D[:, 1]), axis=1)
    return SurfacePoints(X, W2 * jac)


def surface_points(srf: SurfaceSpline, mesh: FiniteCellMesh, order: int | None = None, max_depth: int = 6) -> SurfacePoints:
    """Gauss points on a spline surface, split so each patch lies in one cell.

    Surfaces whose coordinates each depend on a single parameter are split
    exactly at the cell planes; general surfaces are bisected adaptively
    until the corner and center samples of a patch share a cell.
    """
    order = order or mesh.p + 2
    dep = _separable_axes(srf)
    if dep is not None:
        cuts = [list(kv.breakpoints) for kv in srf.knots]
        for axis, d in enumerate(dep):
            if d is not None:
                cuts[d] += _crossings(srf, d, axis, mesh)
        s_cuts = np.unique(np.round(cuts[0], 15))
        t_cuts = np.unique(np.round(cuts[1], 15))
        return _rule_on_rects(srf, s_cuts, t_cuts, order)
    return _adaptive(srf, mesh, order, max_depth)


def _adaptive(srf: SurfaceSpline, mesh: FiniteCellMesh, order: int, max_depth: int) -> SurfacePoints:
    rects = []
    bs, bt = srf.knots[0].breakpoints, srf.knots[1].breakpoints
    for i in range(len(bs) - 1):
        for j in range(len(bt) - 1):
            rects.append((bs[i], bs[i + 1], bt[j], bt[j + 1]))
    rects = np.array(rects)
    leaves = []
    probe = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5], [0.5, 0], [0, 0.5], [1, 0.5], [0.5, 1]])
    for depth in range(max_depth + 1):
        if len(rects) == 0:
            break
        s = rects[:, None, 0] + probe[None, :, 0] * (rects[:, None, 1] - rects[:, None, 0])
        t = rects[:, None, 2] + probe[None, :, 1] * (rects[:, None, 3] - rects[:, None, 2])
        X = srf.evaluate(np.column_stack([s.ravel(), t.ravel()]))[:, :3]
        c = _cell_coord(mesh, X).reshape(len(rects), len(probe), 3)
        cc = c[:, 4:5, :]
        # a patch is accepted when all probes fall into the cell of its center
        same = np.all((c >= np.floor(cc) - 1e-9) & (c <= np.floor(cc) + 1 + 1e-9), axis=(1, 2))
        done = same | (depth == max_depth)
        leaves.append(rects[done])
        r = rects[~done]
        sm, tm = 0.5 * (r[:, 0] + r[:, 1]), 0.5 * (r[:, 2] + r[:, 3])
        rects = np.concatenate(
            [
                np.column_stack([r[:, 0], sm, r[:, 2], tm]),
                np.column_stack([sm, r[:, 1], r[:, 2], tm]),
                np.column_stack([r[:, 0], sm, tm, r[:, 3]]),
                np.column_stack([sm, r[:, 1], tm, r[:, 3]]),
            ]
        )
    parts = [
        _rule_on_rects(srf, [a, b], [c_, d], order) for L in leaves for a, b, c_, d in L
    ]
    if not parts:
        return SurfacePoints(np.zeros((0, 3)), np.zeros(0))
    return SurfacePoints(np.concatenate([p.x for p in parts]), np.concatenate([p.w for p in parts]))


# symmetric 6-point triangle rule (degree 4)
_TRI_A = np.array([0.445948490915965, 0.091576213509771])
_TRI_W = np.array([0.223381589678011, 0.109951743655322])


def _triangle_rule():
    bary, w = [], []
    for a, wt in zip(_TRI_A, _TRI_W):
        b = 1 - 2 * a
        for perm in ((a, a, b), (a, b, a), (b, a, a)):
            bary.append(perm)
            w.append(wt / 2)
    return np.array(bary), np.array(w)


def triangle_points(ts: TriangleSet, mesh: FiniteCellMesh, max_depth: int = 5) -> SurfacePoints:
    """Approximate rule: triangles are split 1:4 until their vertices share a cell."""
    V = np.asarray(ts.vertices, dtype=float)
    tris = V[np.asarray(ts.triangles)]
    leaves = []
    for depth in range(max_depth + 1):
        c = _cell_coord(mesh, tris.reshape(-1, 3)).reshape(-1, 3, 3)
        cen = np.floor(_cell_coord(mesh, tris.mean(axis=1)))[:, None, :]
        same = np.all((c >= cen - 1e-9) & (c <= cen + 1 + 1e-9), axis=(1, 2))
        done = same | (depth == max_depth)
        leaves.append(tris[done])
        t = tris[~done]
        if len(t) == 0:
            break
        m01, m12, m02 = 0.5 * (t[:, 0] + t[:, 1]), 0.5 * (t[:, 1] + t[:, 2]), 0.5 * (t[:, 0] + t[:, 2])
        tris = np.concatenate(
            [
                np.stack([t[:, 0], m01, m02], 1),
                np.stack([m01, t[:, 1], m12], 1),
                np.stack([m02, m12, t[:, 2]], 1),
                np.stack([m01, m12, m02], 1),
            ]
        )
    T = np.concatenate(leaves)
    bary, w = _triangle_rule()
    area = 0.5 * np.linalg.norm(np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]), axis=1)
    X = np.einsum("qk,tkd->tqd", bary, T).reshape(-1, 3)
    W = (area[:, None] * w[None] * 2).reshape(-1)
    return SurfacePoints(X, W)


def support_points(support, mesh: FiniteCellMesh, order: int | None = None) -> SurfacePoints:
    """Quadrature points for a support given as surfaces, triangles or ready-made points."""
    if isinstance(support, SurfacePoints):
        return support
    if isinstance(support, SurfaceSpline):
        return surface_points(support, mesh, order)
    if isinstance(support, TriangleSet):
        return triangle_points(support, mesh)
    if isinstance(support, (list, tuple)):
        parts = [support_points(s, mesh, order) for s in support]
        return SurfacePoints(np.concatenate([p.x for p in parts]), np.concatenate([p.w for p in parts]))
    raise TypeError(f"unsupported boundary support {type(support).__name__}")


# ---------------------------------------------------------------------------
# boundary condition records


def _as_field(v, ncomp: int) -> Callable[[np.ndarray], np.ndarray]:
    if callable(v):
        return lambda x: np.asarray(v(x), dtype=float).reshape(len(x), ncomp)
    arr = np.broadcast_to(np.asarray(v, dtype=float), (ncomp,))
    return lambda x: np.broadcast_to(arr, (len(x), ncomp))


@dataclass
class PenaltyDirichlet:
    """Weak ``u_c = g_c`` on the support for the listed components (penalty ``beta``)."""

    support: object
    components: Sequence[int] = (0, 1, 2)
    value: object = 0.0
    beta: float | None = None

    def values(self, x):
        return _as_field(self.value, len(self.components))(x)


@dataclass
class Neumann:
    """Prescribed traction vector (constant or function of ``x``)."""

    support: object
    traction: object

    def values(self, x):
        return _as_field(self.traction, 3)(x)


@dataclass
class HeatDirichlet:
    support: object
    value: object
    beta: float | None = None

    def values(self, x):
        return _as_field(self.value, 1)(x)[:, 0]


@dataclass
class HeatFlux:
    """Prescribed inward normal heat flux."""

    support: object
    flux: object

    def values(self, x):
        return _as_field(self.flux, 1)(x)[:, 0]
