"""Cell classification and composed Gauss quadrature on octree leaves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..membership import Hits, as_membership
from .basis import gauss_3d
from .mesh import FiniteCellMesh

OUTSIDE, INSIDE, CUT = 0, 1, 2

_CLASSIFY = np.linspace(0.0, 1.0, 5)
_MIXED = np.array([1.0, 3.0, 5.0]) / 6.0
# near-corner probes catch boundaries in the outer band of a sub-box while
# faces lying exactly on a sub-box boundary do not trigger a split
_CORNER_INSET = 1e-3


class Indicator:
    """``alpha(x) = 1`` inside the physical domain, ``10**-q`` outside."""

    def __init__(self, membership, q: float = 8.0):
        self.membership = as_membership(membership)
        self.q = float(q)

    @property
    def alpha_out(self) -> float:
        return 10.0 ** (-self.q)

    def __call__(self, x) -> np.ndarray:
        inside = self.membership(x).inside
        return np.where(inside, 1.0, self.alpha_out)

    def with_q(self, q: float) -> "Indicator":
        return Indicator(self.membership, q)


def _lattice(t: np.ndarray) -> np.ndarray:
    return np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)


def classify_cells(mesh: FiniteCellMesh, membership) -> np.ndarray:
    """Per-cell ``OUTSIDE``, ``INSIDE`` or ``CUT`` from a 5^3 lattice incl. corners."""
    member = as_membership(membership)
    lat = _lattice(_CLASSIFY)
    lo, _ = mesh.cell_box(np.arange(mesh.n_cells))
    pts = lo[:, None, :] + lat[None, :, :] * mesh.h
    inside = member(pts.reshape(-1, 3)).inside.reshape(mesh.n_cells, -1)
    cls = np.full(mesh.n_cells, CUT, dtype=np.int8)
    cls[inside.all(axis=1)] = INSIDE
    cls[~inside.any(axis=1)] = OUTSIDE
    return cls


def octree_leaves(lo: np.ndarray, size: np.ndarray, membership, depth: int):
    """Leaf boxes of the octrees over boxes ``lo[i] + [0, size[i]]``.

    A box whose inset 3^3 lattice (plus 8 near-corner probes) is mixed is
    split until ``depth``.
    Returns ``(owner, leaf_lo, leaf_size, level)``.
    """
    member = as_membership(membership)
    lat = np.vstack([_lattice(_MIXED), _lattice(np.array([_CORNER_INSET, 1.0 - _CORNER_INSET]))])
    owner = np.arange(len(lo))
    cur_lo, cur_size = np.asarray(lo, float), np.asarray(size, float)
    out_owner, out_lo, out_size, out_level = [], [], [], []
    child = _lattice(np.array([0.0, 0.5]))
    for level in range(depth + 1):
        if len(cur_lo) == 0:
            break
        if level == depth:
            mixed = np.zeros(len(cur_lo), dtype=bool)
        else:
            pts = cur_lo[:, None, :] + lat[None] * cur_size[:, None, :]
            ins = member(pts.reshape(-1, 3)).inside.reshape(len(cur_lo), -1)
            mixed = ins.any(axis=1) & ~ins.all(axis=1)
        keep = ~mixed
        out_owner.append(owner[keep])
        out_lo.append(cur_lo[keep])
        out_size.append(cur_size[keep])
        out_level.append(np.full(keep.sum(), level))
        if not mixed.any():
            break
        m_lo, m_size, m_own = cur_lo[mixed], cur_size[mixed], owner[mixed]
        cur_lo = (m_lo[:, None, :] + child[None] * m_size[:, None, :]).reshape(-1, 3)
        cur_size = np.repeat(0.5 * m_size, 8, axis=0)
        owner = np.repeat(m_own, 8)
    if not out_owner:
        return np.zeros(0, dtype=int), np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0, dtype=int)
    return (
        np.concatenate(out_owner),
        np.concatenate(out_lo),
        np.concatenate(out_size),
        np.concatenate(out_level),
    )


def build_octree(cell_lo, cell_size, membership, depth: int, order: int):
    """Composed Gauss rule on one cell: points ``(n, 3)``, weights, inside flags."""
    owner, llo, lsz, _ = octree_leaves(
        np.atleast_2d(cell_lo), np.atleast_2d(cell_size), membership, depth
    )
    g, gw = gauss_3d(order)
    pts = (llo[:, None, :] + 0.5 * (g[None] + 1.0) * lsz[:, None, :]).reshape(-1, 3)
    w = (gw[None, :] * np.prod(lsz, axis=1)[:, None] / 8.0).reshape(-1)
    inside = as_membership(membership)(pts).inside
    return pts, w, inside


@dataclass
class QuadratureSet:
    """Quadrature points of all cells, grouped per cell (``ptr`` offsets).

    ``w`` are physical weights; ``phys`` marks points in the physical domain;
    ``hits`` holds membership details for every point.
    """

    mesh: FiniteCellMesh
    ptr: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    w: np.ndarray
    phys: np.ndarray
    hits: Hits
    classes: np.ndarray
    order: int
    depth: int

    @property
    def n_points(self) -> int:
        return len(self.w)

    def cell_slice(self, c: int) -> slice:
        return slice(int(self.ptr[c]), int(self.ptr[c + 1]))

    def physical_volume(self) -> float:
        return float(self.w[self.phys].sum())


def integrate_mesh(
    mesh: FiniteCellMesh,
    membership,
    depth: int = 4,
    order: int | None = None,
    classes: np.ndarray | None = None,
) -> QuadratureSet:
    """Quadrature for every cell: tensor Gauss on uncut cells, octree leaves on cut cells."""
    member = as_membership(membership)
    order = mesh.p + 1 if order is None else order
    if classes is None:
        classes = classify_cells(mesh, member)
    g, gw = gauss_3d(order)
    h = mesh.h
    cells = np.arange(mesh.n_cells)
    lo, _ = mesh.cell_box(cells)

    cut = np.flatnonzero(classes == CUT)
    owner, llo, lsz, _ = octree_leaves(lo[cut], np.broadcast_to(h, (len(cut), 3)), member, depth)
    owner = cut[owner]
    # points per cell
    n_per = np.where(classes == CUT, 0, len(g))
    leaf_count = np.bincount(owner, minlength=mesh.n_cells)
    n_per = n_per + leaf_count * len(g)
    ptr = np.concatenate([[0], np.cumsum(n_per)])
    N = int(ptr[-1])
    x = np.empty((N, 3))
    w = np.empty(N)
    # uncut cells
    unc = np.flatnonzero(classes != CUT)
    if len(unc):
        idx = ptr[unc][:, None] + np.arange(len(g))
        x[idx] = lo[unc][:, None, :] + 0.5 * (g[None] + 1.0) * h
        w[idx] = gw * (np.prod(h) / 8.0)
    # leaves, ordered by owning cell
    if len(owner):
        order_l = np.argsort(owner, kind="stable")
        owner, llo, lsz = owner[order_l], llo[order_l], lsz[order_l]
        first = np.searchsorted(owner, owner, side="left")
        rank = np.arange(len(owner)) - first
        base = ptr[owner] + rank * len(g)
        idx = base[:, None] + np.arange(len(g))
        x[idx] = llo[:, None, :] + 0.5 * (g[None] + 1.0) * lsz[:, None, :]
        w[idx] = gw[None, :] * (np.prod(lsz, axis=1)[:, None] / 8.0)
    cell_of = np.repeat(cells, n_per)
    xi = 2.0 * (x - lo[cell_of]) / h - 1.0

    phys = np.repeat(classes == INSIDE, n_per)
    need = np.flatnonzero(np.repeat(classes != OUTSIDE, n_per))
    hits = Hits(np.zeros(N, dtype=bool), np.full(N, -1, dtype=np.int64), np.full((N, 3), np.nan))
    if len(need):
        hh = member(x[need])
        hits.inside[need] = hh.inside
        if hh.cell is not None:
            hits.cell[need] = hh.cell
        if hh.param is not None:
            hits.param[need] = hh.param
        cutpts = need[classes[cell_of[need]] == CUT]
        phys[cutpts] = hits.inside[cutpts]
    # inside cells count as physical irrespective of point tests
    hits.inside[:] = phys
    if not np.any(hits.cell >= 0):
        hits.cell = None
        hits.param = None
    return QuadratureSet(mesh, ptr, x, xi, w, phys, hits, classes, order, depth)
