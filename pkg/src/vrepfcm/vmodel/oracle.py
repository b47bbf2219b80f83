"""One membership interface over both engines."""

from __future__ import annotations

import threading

import numpy as np

from ..membership import Hits, Membership
from .inverse import InverseEngine
from .model import Leaf, VModel, evaluate_csg
from .raycast import point_inclusion_ray
from .tessellation import tessellate_cells


class RayEngine:
    """Ray-parity membership; each CSG leaf is tessellated separately and the
    results are combined by the model's CSG tree."""

    def __init__(self, vm: VModel, resolution: int = 16, seed: int = 0):
        self.vm = vm
        self.resolution = resolution
        self.seed = seed
        self._lock = threading.Lock()
        self._boundaries: dict[Leaf, object] = {}

    def boundary(self, leaf: Leaf):
        with self._lock:
            tb = self._boundaries.get(leaf)
            if tb is None:
                tb = tessellate_cells(self.vm, leaf.cells, self.resolution)
                tb.tree  # build the index once, before concurrent use
                self._boundaries[leaf] = tb
        return tb

    def __call__(self, x) -> Hits:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = len(x)
        if n == 0 or not self.vm.cells:
            return Hits(np.zeros(n, dtype=bool))
        return evaluate_csg(
            self.vm.csg, lambda lf: Hits(point_inclusion_ray(self.boundary(lf), x, self.seed)), n
        )


def membership_oracle(vm: VModel, engine: str = "inverse", resolution: int = 16, seed: int = 0,
                      use_cache: bool = True) -> Membership:
    """Point-membership callable ``(N, 3) -> Hits`` for the chosen engine.

    The inverse engine also reports the containing cell and its parameters.
    """
    if engine == "inverse":
        eng = InverseEngine(vm, use_cache=use_cache)
    elif engine == "ray":
        eng = RayEngine(vm, resolution, seed)
    else:
        raise ValueError(f"unknown membership engine {engine!r} (use 'inverse' or 'ray')")
    m = Membership(eng)
    m.engine = eng
    return m
