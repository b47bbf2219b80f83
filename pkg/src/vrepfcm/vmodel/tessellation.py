"""Boundary tessellation of V-models and binary STL exchange."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from .model import Leaf, VModel


class NotWatertightError(ValueError):
    def __init__(self, message, bad_edges=None, face_pairs=None):
        super().__init__(message)
        self.bad_edges = bad_edges
        self.face_pairs = face_pairs or []


@dataclass
class TriBoundary:
    """Closed oriented triangle surface with a lazily built kd-tree."""

    vertices: np.ndarray
    triangles: np.ndarray
    resolution: int = 0
    _tree: object = field(default=None, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    def area(self) -> float:
        T = self.corners
        return float(0.5 * np.linalg.norm(np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]), axis=1).sum())

    def volume(self) -> float:
        """Signed enclosed volume (positive for outward orientation)."""
        T = self.corners
        return float(np.einsum("ij,ij->i", T[:, 0], np.cross(T[:, 1], T[:, 2])).sum() / 6.0)

    def edge_counts(self):
        e = np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        directed = e
        und = np.sort(e, axis=1)
        keys, counts = np.unique(und, axis=0, return_counts=True)
        return keys, counts, directed

    def is_watertight(self) -> bool:
        if self.n_triangles == 0:
            return False
        keys, counts, directed = self.edge_counts()
        if np.any(counts != 2):
            return False
        # consistent orientation: every directed edge appears exactly once
        _, dcounts = np.unique(directed, axis=0, return_counts=True)
        return bool(np.all(dcounts == 1))

    def distance(self, x, k: int = 32) -> np.ndarray:
        """Unsigned distance to the surface, searched over the ``k`` triangles with nearest centroids."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if len(x) == 0 or self.n_triangles == 0:
            return np.full(len(x), np.inf)
        T = self.corners
        k = min(k, len(T))
        _, nn = cKDTree(T.mean(axis=1)).query(x, k=k)
        nn = np.asarray(nn).reshape(len(x), k)
        P = np.repeat(x, k, axis=0)
        c = _closest_on_triangles(P, T[nn.ravel()])
        return np.linalg.norm(c - P, axis=1).reshape(len(x), k).min(axis=1)

    @property
    def tree(self):
        if self._tree is None:
            from .raycast import KdTree

            self._tree = KdTree(self.corners)
        return self._tree

    # -- STL -------------------------------------------------------------------

    def write_stl(self, path: str, header: str = "vrepfcm tessellation"):
        T = self.corners.astype(np.float32)
        n = np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
        nn = np.linalg.norm(n, axis=1, keepdims=True)
        n = (n / np.where(nn > 0, nn, 1)).astype(np.float32)
        rec = np.zeros(len(T), dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]))
        rec["n"], rec["v"] = n, T
        with open(path, "wb") as fh:
            fh.write(header.encode()[:80].ljust(80, b"\0"))
            fh.write(struct.pack("<I", len(T)))
            fh.write(rec.tobytes())

    @classmethod
    def read_stl(cls, path: str, tol: float = 0.0) -> "TriBoundary":
        with open(path, "rb") as fh:
            fh.read(80)
            (n,) = struct.unpack("<I", fh.read(4))
            rec = np.frombuffer(fh.read(50 * n), dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]))
        V = rec["v"].astype(float).reshape(-1, 3)
        verts, inv = _merge_vertices(V, tol)
        return cls(verts, inv.reshape(-1, 3))


def _closest_on_triangles(P: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Closest point on triangle ``T[i]`` to ``P[i]`` (Voronoi-region case analysis)."""
    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    ab, ac, ap = b - a, c - a, P - a
    dot = lambda u, v: np.einsum("ij,ij->i", u, v)  # noqa: E731
    d1, d2 = dot(ab, ap), dot(ac, ap)
    bp, cp = P - b, P - c
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        out = a + ab * v[:, None] + ac * w[:, None]
        # edge regions
        t_ab = d1 / (d1 - d3)
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        out[m] = (a + ab * t_ab[:, None])[m]
        t_ac = d2 / (d2 - d6)
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        out[m] = (a + ac * t_ac[:, None])[m]
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        m = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        out[m] = (b + (c - b) * t_bc[:, None])[m]
    # vertex regions
    m = (d1 <= 0) & (d2 <= 0)
    out[m] = a[m]
    m = (d3 >= 0) & (d4 <= d3)
    out[m] = b[m]
    m = (d6 >= 0) & (d5 <= d6)
    out[m] = c[m]
    return out


def _merge_vertices(V: np.ndarray, tol: float):
    """Weld coincident vertices (within ``tol``); returns unique vertices and the index map."""
    if tol <= 0:
        verts, inv = np.unique(V, axis=0, return_inverse=True)
        return verts, inv.reshape(-1)
    pairs = cKDTree(V).query_pairs(tol, output_type="ndarray")
    n = len(V)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else coo_matrix((n, n))
    _, label = connected_components(g, directed=False)
    _, first = np.unique(label, return_index=True)
    verts = V[first]
    return verts, label


def _face_grid(srf, resolution: int):
    """Sample points of a face: ``resolution`` samples (end points included) per knot span."""
    axes = []
    for kv in srf.knots:
        bp = kv.breakpoints
        t = np.concatenate([np.linspace(a, b, resolution)[:-1] for a, b in zip(bp[:-1], bp[1:])] + [bp[-1:]])
        axes.append(t)
    S, T = np.meshgrid(axes[0], axes[1], indexing="ij")
    X = srf.evaluate(np.column_stack([S.ravel(), T.ravel()]))[:, :3]
    return X.reshape(len(axes[0]), len(axes[1]), 3)


def _grid_triangles(ns: int, nt: int, flip: bool) -> np.ndarray:
    I, J = np.meshgrid(np.arange(ns - 1), np.arange(nt - 1), indexing="ij")
    a = (I * nt + J).ravel()
    b = a + nt  # (i+1, j)
    c = a + nt + 1
    d = a + 1  # (i, j+1)
    # cross(ds, dt) orientation: (a, b, c) and (a, c, d)
    t = np.concatenate([np.c_[a, b, c], np.c_[a, c, d]])
    return t[:, ::-1] if flip else t


def _face_key(X: np.ndarray, tol: float):
    """Orientation-free signature of a sampled face (sorted rounded points)."""
    P = np.round(X.reshape(-1, 3) / tol).astype(np.int64)
    order = np.lexsort(P.T[::-1])
    return P[order]


def tessellate_cells(vm: VModel, cell_ids, resolution: int = 8, check: bool = True) -> TriBoundary:
    """Boundary of the union of the given (face-conforming) cells."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2 samples per span")
    tol = max(vm.tol_geom, 1e-12) * 1e3
    faces = []
    for cid in cell_ids:
        cell = vm.cell(cid)
        orient = cell.orientation
        for name, srf in cell.spline.boundary_faces().items():
            X = _face_grid(srf, resolution)
            # drop collapsed faces (e.g. on a revolution axis)
            if np.ptp(X.reshape(-1, 3), axis=0).max() <= tol:
                continue
            outward_if_cross = name.endswith("1")
            flip = (outward_if_cross != (orient > 0))
            faces.append((cid, name, X, flip))
    # interior faces: pairs with identical sample sets
    keys = {}
    for k, (cid, name, X, _) in enumerate(faces):
        sig = _face_key(X, tol * 10)
        h = hash(sig.tobytes())
        keys.setdefault(h, []).append(k)
    drop = set()
    pairs = []
    for h, ks in keys.items():
        if len(ks) >= 2:
            drop.update(ks)
            pairs.append([(faces[k][0], faces[k][1]) for k in ks])
    V, T = [], []
    off = 0
    for k, (cid, name, X, flip) in enumerate(faces):
        if k in drop:
            continue
        ns, nt, _ = X.shape
        V.append(X.reshape(-1, 3))
        T.append(_grid_triangles(ns, nt, flip) + off)
        off += ns * nt
    if not V:
        return TriBoundary(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), resolution)
    Vall = np.concatenate(V)
    verts, label = _merge_vertices(Vall, tol)
    tris = label[np.concatenate(T)]
    # remove triangles degenerated by welding (collapsed edges)
    good = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tb = TriBoundary(verts, tris[good], resolution)
    if check and not tb.is_watertight():
        keys_, counts, _ = tb.edge_counts()
        bad = keys_[counts != 2]
        raise NotWatertightError(
            f"tessellation is not watertight: {len(bad)} edges not shared by exactly two triangles; "
            f"matched face groups {pairs}",
            bad,
            pairs,
        )
    return tb


def tessellate(vm: VModel, resolution: int = 8, check: bool = True) -> TriBoundary:
    """Watertight boundary of all cells of the model taken as one union."""
    return tessellate_cells(vm, vm.ids, resolution, check)


def tessellate_leaves(vm: VModel, resolution: int = 8) -> dict:
    """One closed boundary per CSG leaf (keyed by the leaf)."""
    from .model import csg_leaves

    return {lf: tessellate_cells(vm, lf.cells, resolution) for lf in csg_leaves(vm.csg)}
