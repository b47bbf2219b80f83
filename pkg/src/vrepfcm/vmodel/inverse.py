"""Point membership by spline inversion, with a per-worker warm-start cache."""

from __future__ import annotations

import threading

import numpy as np

from ..membership import Hits
from .model import Leaf, VModel, evaluate_csg


class InversionCache:
    """Per-cell last successful inversion ``(param, image)``; hints only."""

    def __init__(self):
        self.entries: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def get(self, cid: int):
        return self.entries.get(cid)

    def put(self, cid: int, param: np.ndarray, image: np.ndarray):
        self.entries[cid] = (np.array(param, dtype=float), np.array(image, dtype=float))

    def clear(self):
        self.entries.clear()


class InverseEngine:
    """Membership of points in a :class:`VModel` via Newton inversion of each cell.

    A point belongs to a cell when the inversion converges to a parameter
    inside the knot box (closed, within ``tol_geom``).  Points outside a
    cell's padded bounding box are rejected without iterating.  With the
    cache enabled the start value is the last inner point of the cell when
    its image is closer to the query than the nearest lattice seed.
    """

    def __init__(self, vm: VModel, use_cache: bool = True, max_iter: int = 30):
        self.vm = vm
        self.use_cache = use_cache
        self.max_iter = max_iter
        self._local = threading.local()
        pad = vm.tol_geom
        self._boxes = {}
        for c in vm.cells:
            lo, hi = c.spline.bbox
            self._boxes[c.id] = (lo - pad, hi + pad)
        self.iterations = 0
        self.newton_points = 0

    @property
    def cache(self) -> InversionCache:
        c = getattr(self._local, "cache", None)
        if c is None:
            c = self._local.cache = InversionCache()
        return c

    def reset_stats(self):
        self.iterations = 0
        self.newton_points = 0

    def cell_hits(self, cid: int, x: np.ndarray):
        """``(inside, params, iterations)`` of points against one cell."""
        sp = self.vm.cell(cid).spline
        n = len(x)
        inside = np.zeros(n, dtype=bool)
        params = np.full((n, 3), np.nan)
        its = np.zeros(n, dtype=int)
        lo, hi = self._boxes[cid]
        cand = np.flatnonzero(np.all((x >= lo) & (x <= hi), axis=1))
        if len(cand) == 0:
            return inside, params, its
        xc = x[cand]
        guess = sp.seed_params(xc)
        if self.use_cache:
            hit = self.cache.get(cid)
            if hit is not None:
                seed_img = sp.evaluate(guess)[:, :3]
                d_seed = np.linalg.norm(seed_img - xc, axis=1)
                d_cache = np.linalg.norm(hit[1] - xc, axis=1)
                use = d_cache < d_seed
                guess[use] = hit[0]
        u, ok, it = sp.invert_points(xc, guess, sp.tol_geom if self.vm.tol_geom is None else self.vm.tol_geom, self.max_iter)
        inside[cand] = ok
        params[cand[ok]] = u[ok]
        its[cand] = it
        self.iterations += int(it.sum())
        self.newton_points += len(cand)
        if self.use_cache and ok.any():
            last = np.flatnonzero(ok)[-1]
            self.cache.put(cid, u[last], xc[last])
        return inside, params, its

    def _leaf(self, leaf: Leaf, x: np.ndarray) -> Hits:
        n = len(x)
        inside = np.zeros(n, dtype=bool)
        cell = np.full(n, -1, dtype=np.int64)
        param = np.full((n, 3), np.nan)
        for cid in leaf.cells:
            todo = np.flatnonzero(~inside)
            if len(todo) == 0:
                break
            ins, par, _ = self.cell_hits(cid, x[todo])
            sel = todo[ins]
            inside[sel] = True
            cell[sel] = cid
            param[sel] = par[ins]
        return Hits(inside, cell, param)

    def __call__(self, x) -> Hits:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = len(x)
        if n == 0 or not self.vm.cells:
            return Hits(np.zeros(n, dtype=bool), np.full(n, -1, dtype=np.int64), np.full((n, 3), np.nan))
        return evaluate_csg(self.vm.csg, lambda lf: self._leaf(lf, x), n)


def point_inclusion_inverse(vm: VModel, x, cache: InversionCache | None = None) -> dict:
    """Single-point membership: ``{"inside", "cell", "param", "iterations"}``."""
    eng = InverseEngine(vm, use_cache=cache is not None)
    if cache is not None:
        eng._local.cache = cache
    h = eng(np.atleast_2d(x))
    inside = bool(h.inside[0])
    return {
        "inside": inside,
        "cell": int(h.cell[0]) if inside else None,
        "param": h.param[0] if inside else None,
        "iterations": eng.iterations,
    }
