"""Ray-parity point inclusion on triangle boundaries with an SAH kd-tree."""

from __future__ import annotations

import numpy as np

from .tessellation import TriBoundary

LEAF_SIZE = 8
GRAZE_TOL = 1e-12
MAX_RECAST = 8
_N_BINS = 16
_TRAVERSAL_COST = 1.0
_INTERSECT_COST = 1.5


class KdTree:
    """Axis-aligned kd-tree over triangles, split by a binned surface-area heuristic.

    Built level by level with vectorized binning.  A leaf holds the indices
    of the triangles overlapping its box (straddling triangles go to both
    sides) as a slice of ``leaf_items``.
    """

    def __init__(self, tris: np.ndarray, leaf_size: int = LEAF_SIZE, max_depth: int = 24):
        self.tris = np.asarray(tris, dtype=float)
        self.v0 = self.tris[:, 0]
        self.e1 = self.tris[:, 1] - self.v0
        self.e2 = self.tris[:, 2] - self.v0
        self.tlo = self.tris.min(axis=1)
        self.thi = self.tris.max(axis=1)
        self.leaf_size = leaf_size
        lo = self.tlo.min(axis=0) if len(self.tris) else np.zeros(3)
        hi = self.thi.max(axis=0) if len(self.tris) else np.zeros(3)
        pad = 1e-9 * max(float(np.max(hi - lo)), 1.0)
        self._build(lo - pad, hi + pad, max_depth)

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def items(self, node: int) -> np.ndarray:
        return self.leaf_items[self.start[node] : self.stop[node]]

    @staticmethod
    def _area(ext):
        return 2.0 * (ext[..., 0] * ext[..., 1] + ext[..., 1] * ext[..., 2] + ext[..., 0] * ext[..., 2])

    def _build(self, lo0, hi0, max_depth):
        nb = _N_BINS
        los, his, lefts, rights = [lo0], [hi0], [-1], [-1]
        leaf_tri, leaf_node = [], []
        tri = np.arange(len(self.tris))
        node = np.zeros(len(tri), dtype=np.int64)
        active = np.array([0])
        frac = np.arange(1, nb) / nb
        for depth in range(max_depth + 1):
            if len(active) == 0:
                break
            m = len(active)
            local = np.full(len(los), -1)
            local[active] = np.arange(m)
            ln = local[node]
            cnt = np.bincount(ln, minlength=m)
            lo = np.array([los[a] for a in active])
            hi = np.array([his[a] for a in active])
            ext = hi - lo
            split_axis = np.full(m, -1)
            split_pos = np.zeros(m)
            if depth < max_depth:
                scale = nb / np.where(ext > 0, ext, np.inf)
                bl = np.clip(np.ceil((self.tlo[tri] - lo[ln]) * scale[ln]).astype(int), 0, nb)
                bh = np.clip(np.floor((self.thi[tri] - lo[ln]) * scale[ln]).astype(int), 0, nb)
                off = ln[:, None] * 3 * (nb + 1) + np.arange(3) * (nb + 1)
                cl = np.bincount((bl + off).ravel(), minlength=m * 3 * (nb + 1)).reshape(m, 3, nb + 1)
                ch = np.bincount((bh + off).ravel(), minlength=m * 3 * (nb + 1)).reshape(m, 3, nb + 1)
                nl = np.cumsum(cl, axis=2)[:, :, 1:nb]
                nr = cnt[:, None, None] - np.cumsum(ch, axis=2)[:, :, : nb - 1]
                parent = self._area(ext)
                cost = np.full((m, 3, nb - 1), np.inf)
                for axis in range(3):
                    el = np.repeat(ext[:, None, :], nb - 1, axis=1)
                    er = el.copy()
                    el[:, :, axis] = ext[:, axis, None] * frac
                    er[:, :, axis] = ext[:, axis, None] * (1 - frac)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        cost[:, axis] = _TRAVERSAL_COST + _INTERSECT_COST * (
                            self._area(el) * nl[:, axis] + self._area(er) * nr[:, axis]
                        ) / parent[:, None]
                    cost[ext[:, axis] <= 0, axis] = np.inf
                cost[(nl >= cnt[:, None, None]) | (nr >= cnt[:, None, None])] = np.inf
                flat = cost.reshape(m, -1)
                best = np.argmin(flat, axis=1)
                bcost = flat[np.arange(m), best]
                ok = (cnt > self.leaf_size) & (bcost < _INTERSECT_COST * cnt)
                ax, k = np.divmod(best, nb - 1)
                split_axis[ok] = ax[ok]
                split_pos[ok] = lo[ok, ax[ok]] + ext[ok, ax[ok]] * frac[k[ok]]
            # finalize leaves
            is_leaf = split_axis[ln] < 0
            leaf_tri.append(tri[is_leaf])
            leaf_node.append(node[is_leaf])
            tri, node, ln = tri[~is_leaf], node[~is_leaf], ln[~is_leaf]
            splitting = np.flatnonzero(split_axis >= 0)
            child_l = np.full(m, -1)
            child_r = np.full(m, -1)
            for j in splitting:
                a, pos = split_axis[j], split_pos[j]
                hl, lr = hi[j].copy(), lo[j].copy()
                hl[a] = pos
                lr[a] = pos
                child_l[j] = len(los)
                los.append(lo[j]), his.append(hl), lefts.append(-1), rights.append(-1)
                child_r[j] = len(los)
                los.append(lr), his.append(hi[j]), lefts.append(-1), rights.append(-1)
                lefts[active[j]] = child_l[j]
                rights[active[j]] = child_r[j]
            ax = split_axis[ln]
            pos = split_pos[ln]
            go_l = self.tlo[tri, ax] <= pos
            go_r = self.thi[tri, ax] >= pos
            tri = np.concatenate([tri[go_l], tri[go_r]])
            node = np.concatenate([child_l[ln[go_l]], child_r[ln[go_r]]])
            active = np.concatenate([child_l[splitting], child_r[splitting]])
        self.lo_ = np.array(los)
        self.hi_ = np.array(his)
        self.left = np.array(lefts)
        self.right = np.array(rights)
        lt = np.concatenate(leaf_tri) if leaf_tri else np.zeros(0, dtype=int)
        lnode = np.concatenate(leaf_node) if leaf_node else np.zeros(0, dtype=int)
        order = np.argsort(lnode, kind="stable")
        self.leaf_items = lt[order]
        counts = np.bincount(lnode, minlength=len(los))
        self.stop = np.cumsum(counts)
        self.start = self.stop - counts

    def ray_hits(self, origins: np.ndarray, dirs: np.ndarray):
        """All ``(ray, triangle, t, u, v)`` intersections with ``t > 0`` (deduplicated)."""
        inv = 1.0 / np.where(np.abs(dirs) > 1e-300, dirs, 1e-300)
        stack = [(0, np.arange(len(origins)))]
        out_r, out_t, out_tt, out_u, out_v = [], [], [], [], []
        while stack:
            node, rays = stack.pop()
            if len(rays) == 0:
                continue
            o, iv = origins[rays], inv[rays]
            t1 = (self.lo_[node] - o) * iv
            t2 = (self.hi_[node] - o) * iv
            tmin = np.minimum(t1, t2).max(axis=1)
            tmax = np.maximum(t1, t2).min(axis=1)
            rays = rays[(tmax >= np.maximum(tmin, 0.0))]
            if len(rays) == 0:
                continue
            if self.left[node] < 0:
                tri = self.items(node)
                if len(tri):
                    r, tr, t, u, v = _moller_trumbore(origins, dirs, rays, tri, self.v0, self.e1, self.e2)
                    out_r.append(r)
                    out_t.append(tr)
                    out_tt.append(t)
                    out_u.append(u)
                    out_v.append(v)
                continue
            stack.append((self.left[node], rays))
            stack.append((self.right[node], rays))
        if not out_r:
            z = np.zeros(0)
            return z.astype(int), z.astype(int), z, z, z
        r = np.concatenate(out_r)
        tr = np.concatenate(out_t)
        t, u, v = np.concatenate(out_tt), np.concatenate(out_u), np.concatenate(out_v)
        key = r * len(self.tris) + tr
        _, first = np.unique(key, return_index=True)
        return r[first], tr[first], t[first], u[first], v[first]


def _cross(a, b):
    return np.stack(
        [a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1], a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2], a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]],
        axis=1,
    )


def _moller_trumbore(origins, dirs, rays, tri, v0, e1, e2):
    R = np.repeat(rays, len(tri))
    T = np.tile(tri, len(rays))
    d = dirs[R]
    s = origins[R] - v0[T]
    E1, E2 = e1[T], e2[T]
    p = _cross(d, E2)
    det = (E1 * p).sum(axis=1)
    ok = np.abs(det) > 1e-300
    inv = 1.0 / np.where(ok, det, 1.0)
    u = (s * p).sum(axis=1) * inv
    q = _cross(s, E1)
    v = (d * q).sum(axis=1) * inv
    t = (E2 * q).sum(axis=1) * inv
    tol = GRAZE_TOL
    hit = ok & (u >= -tol) & (v >= -tol) & (u + v <= 1 + tol) & (t > 0)
    return R[hit], T[hit], t[hit], u[hit], v[hit]


def _random_dirs(rng, n):
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _cast(tree: KdTree, x: np.ndarray, dirs: np.ndarray):
    """Crossing parity and grazing flags for one ray per point."""
    r, _, t, u, v = tree.ray_hits(x, dirs)
    graze = np.zeros(len(x), dtype=bool)
    near = (np.minimum(np.minimum(u, v), 1 - u - v) <= GRAZE_TOL)
    graze[r[near]] = True
    count = np.bincount(r, minlength=len(x))
    return (count % 2) == 1, graze


def point_inclusion_ray(tb: TriBoundary, x, seed: int = 0) -> np.ndarray:
    """Odd number of boundary crossings along a random ray means inside.

    Rays grazing a vertex or edge (barycentric tolerance ``1e-12``) are
    re-cast in a new random direction up to 8 times; points still grazing
    take the majority vote of three further rays.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = len(x)
    if n == 0 or tb.n_triangles == 0:
        return np.zeros(n, dtype=bool)
    rng = np.random.default_rng(seed)
    tree = tb.tree
    inside = np.zeros(n, dtype=bool)
    # quick reject outside the bounding box
    lo, hi = tree.lo_[0], tree.hi_[0]
    todo = np.flatnonzero(np.all((x >= lo) & (x <= hi), axis=1))
    for _ in range(MAX_RECAST + 1):
        if len(todo) == 0:
            break
        ins, graze = _cast(tree, x[todo], _random_dirs(rng, len(todo)))
        inside[todo[~graze]] = ins[~graze]
        todo = todo[graze]
    if len(todo):
        votes = np.zeros(len(todo), dtype=int)
        for _ in range(3):
            ins, _ = _cast(tree, x[todo], _random_dirs(rng, len(todo)))
            votes += ins
        inside[todo] = votes >= 2
    return inside
