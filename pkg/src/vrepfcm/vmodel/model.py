"""V-cells, V-models and membership-level CSG trees."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..material.tensors import IsotropicMaterial
from ..membership import Hits
from ..spline_core import TrivariateSpline

MATERIAL_MODES = ("from-channels", "constant", "homogenized")


class SingularCellError(ValueError):
    """V-cell whose geometric map is (sampled) singular or folds over."""


@dataclass(frozen=True)
class VCell:
    """One trivariate spline volume with an integer id and a material mode.

    ``material`` holds an :class:`IsotropicMaterial` for ``constant`` cells
    and an arbitrary handle (e.g. a table file name) for ``homogenized``.
    """

    spline: TrivariateSpline
    id: int
    material_mode: str = "from-channels"
    material: object = None
    check: bool = True

    def __post_init__(self):
        if self.material_mode not in MATERIAL_MODES:
            raise ValueError(f"unknown material mode {self.material_mode!r}")
        if self.material_mode == "constant" and not isinstance(self.material, IsotropicMaterial):
            raise ValueError("constant material mode needs an IsotropicMaterial")
        if self.check and not self.spline.is_regular():
            lo, hi = self.spline.min_jacobian_det()
            raise SingularCellError(f"V-cell {self.id} is singular (det J in [{lo:.3e}, {hi:.3e}])")

    @property
    def orientation(self) -> int:
        """+1 for a right-handed parameterization, -1 otherwise."""
        lo, hi = self.spline.min_jacobian_det(2)
        return 1 if hi > 0 and lo >= -abs(hi) * 1e-9 else -1

    def with_id(self, cid: int) -> "VCell":
        return VCell(self.spline, cid, self.material_mode, self.material, check=False)

    def to_dict(self) -> dict:
        d = {"id": int(self.id), "material_mode": self.material_mode, "spline": self.spline.to_dict()}
        if self.material_mode == "constant":
            m = self.material
            d["material"] = {
                "E": m.E, "nu": m.nu, "kappa": m.kappa, "alpha_th": m.alpha_th, "unit": m.unit,
            }
        elif self.material is not None:
            d["material"] = self.material
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VCell":
        mode = d.get("material_mode", "from-channels")
        mat = d.get("material")
        if mode == "constant":
            mat = IsotropicMaterial(**mat)
        return cls(TrivariateSpline.from_dict(d["spline"]), int(d["id"]), mode, mat)


# ---------------------------------------------------------------------------
# CSG


@dataclass(frozen=True)
class Leaf:
    """Union of the listed cells (the first listed cell wins in overlaps)."""

    cells: tuple[int, ...]


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple

    def __post_init__(self):
        if self.op not in ("union", "intersection", "difference"):
            raise ValueError(f"unknown CSG operator {self.op!r}")
        if len(self.args) < 2:
            raise ValueError("CSG operators need at least two operands")


def csg_to_dict(node) -> dict:
    if isinstance(node, Leaf):
        return {"cells": list(node.cells)}
    return {"op": node.op, "args": [csg_to_dict(a) for a in node.args]}


def csg_from_dict(d):
    if "cells" in d:
        return Leaf(tuple(int(c) for c in d["cells"]))
    return Op(d["op"], tuple(csg_from_dict(a) for a in d["args"]))


def csg_leaves(node) -> list[Leaf]:
    if isinstance(node, Leaf):
        return [node]
    return [lf for a in node.args for lf in csg_leaves(a)]


def evaluate_csg(node, leaf_fn: Callable[[Leaf], Hits], n: int) -> Hits:
    """Combine leaf results; the first operand's cell prevails where operands overlap."""
    if isinstance(node, Leaf):
        return leaf_fn(node)
    parts = [evaluate_csg(a, leaf_fn, n) for a in node.args]
    inside = parts[0].inside.copy()
    with_ids = all(p.cell is not None for p in parts)
    cell = parts[0].cell.copy() if with_ids else None
    param = parts[0].param.copy() if with_ids and parts[0].param is not None else None
    for p in parts[1:]:
        if node.op == "union":
            take = ~inside & p.inside
            inside |= p.inside
            if with_ids:
                cell[take] = p.cell[take]
                if param is not None and p.param is not None:
                    param[take] = p.param[take]
        elif node.op == "intersection":
            inside &= p.inside
        else:
            inside &= ~p.inside
    if with_ids:
        cell[~inside] = -1
        if param is not None:
            param[~inside] = np.nan
    return Hits(inside, cell, param)


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class VModel:
    """Collection of V-cells combined by a CSG tree (default: union of all cells)."""

    cells: tuple[VCell, ...]
    csg: object = None
    tol_geom: float | None = None
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        cells = tuple(self.cells)
        object.__setattr__(self, "cells", cells)
        ids = [c.id for c in cells]
        if len(set(ids)) != len(ids):
            raise ValueError("V-cell ids must be unique")
        object.__setattr__(self, "_index", {c.id: c for c in cells})
        if self.csg is None:
            object.__setattr__(self, "csg", Leaf(tuple(ids)))
        for lf in csg_leaves(self.csg):
            missing = [c for c in lf.cells if c not in self._index]
            if missing:
                raise ValueError(f"CSG references unknown cells {missing}")
        if self.tol_geom is None:
            tol = max((c.spline.tol_geom for c in cells), default=1e-10)
            object.__setattr__(self, "tol_geom", tol)

    def __len__(self):
        return len(self.cells)

    @property
    def ids(self) -> list[int]:
        return [c.id for c in self.cells]

    def cell(self, cid: int) -> VCell:
        return self._index[int(cid)]

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.cells:
            return np.zeros(3), np.zeros(3)
        bb = [c.spline.bbox for c in self.cells]
        return np.min([b[0] for b in bb], axis=0), np.max([b[1] for b in bb], axis=0)

    # -- composition ---------------------------------------------------------

    def renumbered(self, offset: int) -> "VModel":
        def remap(node):
            if isinstance(node, Leaf):
                return Leaf(tuple(c + offset for c in node.cells))
            return Op(node.op, tuple(remap(a) for a in node.args))

        return VModel(tuple(c.with_id(c.id + offset) for c in self.cells), remap(self.csg), self.tol_geom)

    def boolean(self, op: str, other: "VModel") -> "VModel":
        """``self op other``; cell ids of ``other`` are shifted past this model's ids."""
        offset = (max(self.ids) + 1) if self.cells else 0
        b = other.renumbered(offset - (min(other.ids) if other.cells else 0))
        return VModel(self.cells + b.cells, Op(op, (self.csg, b.csg)), max(self.tol_geom, b.tol_geom))

    def union(self, other):
        return self.boolean("union", other)

    def intersection(self, other):
        return self.boolean("intersection", other)

    def difference(self, other):
        return self.boolean("difference", other)

    # -- membership ------------------------------------------------------------

    def membership(self, engine: str = "inverse", **kw):
        from .oracle import membership_oracle

        return membership_oracle(self, engine, **kw)

    def locate(self, x) -> Hits:
        """Inverse-mapping membership with cell ids and parameters."""
        return self._default_engine(x)

    @property
    def _default_engine(self):
        eng = self.__dict__.get("_engine")
        if eng is None:
            from .inverse import InverseEngine

            eng = InverseEngine(self)
            object.__setattr__(self, "_engine", eng)
        return eng

    def volume(self) -> float:
        """Sum of cell volumes (exact for non-overlapping union models)."""
        return float(sum(c.spline.volume() for c in self.cells))

    # -- exchange ----------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "tol_geom": self.tol_geom,
            "cells": [c.to_dict() for c in self.cells],
            "csg": csg_to_dict(self.csg),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VModel":
        cells = tuple(VCell.from_dict(c) for c in d.get("cells", []))
        csg = csg_from_dict(d["csg"]) if d.get("csg") else None
        return cls(cells, csg, d.get("tol_geom"))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text_or_path: str) -> "VModel":
        text = text_or_path
        if not text_or_path.lstrip().startswith("{"):
            with open(text_or_path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def model_of(cells, csg=None, tol_geom=None) -> VModel:
    """VModel from VCells or bare splines (ids assigned in order)."""
    out = []
    for i, c in enumerate(cells):
        out.append(c if isinstance(c, VCell) else VCell(c, i))
    return VModel(tuple(out), csg, tol_geom)
