"""Material models evaluated at quadrature points of the cell method."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from ..material.fields import MaterialField, sample_material
from ..material.table import EffectiveTensorTable
from ..material.tensors import ElasticityTensor, IsotropicMaterial, isotropic_to_voigt
from ..membership import Hits


def isotropic_stiffness(E, nu) -> np.ndarray:
    """Batched Voigt stiffness ``(N, 6, 6)`` for arrays of ``E`` and ``nu``."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    nu = np.broadcast_to(np.asarray(nu, dtype=float), E.shape)
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    C = np.zeros(E.shape + (6, 6))
    C[..., :3, :3] = lam[..., None, None]
    for i in range(3):
        C[..., i, i] = lam + 2 * mu
        C[..., 3 + i, 3 + i] = mu
    return C


def _value(f, x):
    if callable(f):
        return np.asarray(f(x), dtype=float).reshape(len(x))
    return np.full(len(x), float(f))


class MaterialModel:
    """Interface: stiffness, conductivity and expansion at physical points."""

    #: same properties everywhere (allows element-matrix reuse)
    uniform = False

    def stiffness(self, x: np.ndarray, hits: Hits) -> np.ndarray:
        raise NotImplementedError

    def conductivity(self, x: np.ndarray, hits: Hits) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no conductivity")

    def expansion(self, x: np.ndarray, hits: Hits) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no thermal expansion")

    def young_scale(self, x: np.ndarray, hits: Hits) -> float:
        """Largest directional Young's modulus over the given points."""
        C = self.stiffness(x, hits)
        S = np.linalg.inv(C)
        return float(np.max(1.0 / np.einsum("nii->ni", S[:, :3, :3])))


class Homogeneous(MaterialModel):
    uniform = True

    def __init__(self, m: IsotropicMaterial | ElasticityTensor, kappa: float | None = None, alpha_th: float | None = None):
        if isinstance(m, IsotropicMaterial):
            self.C = np.asarray(isotropic_to_voigt(m))
            self.kappa = m.kappa if kappa is None else kappa
            self.alpha_th = m.alpha_th if alpha_th is None else alpha_th
        else:
            self.C = np.asarray(m, dtype=float)
            self.kappa = 0.0 if kappa is None else kappa
            self.alpha_th = 0.0 if alpha_th is None else alpha_th

    def stiffness(self, x, hits):
        return np.broadcast_to(self.C, (len(x), 6, 6))

    def conductivity(self, x, hits):
        return np.full(len(x), float(self.kappa))

    def expansion(self, x, hits):
        return np.full(len(x), float(self.alpha_th))


class Graded(MaterialModel):
    """Isotropic material whose properties are constants or functions of ``x``."""

    def __init__(self, E, nu, kappa=0.0, alpha_th=0.0):
        self.E, self.nu, self.kappa, self.alpha_th = E, nu, kappa, alpha_th

    def stiffness(self, x, hits):
        return isotropic_stiffness(_value(self.E, x), _value(self.nu, x))

    def conductivity(self, x, hits):
        return _value(self.kappa, x)

    def expansion(self, x, hits):
        return _value(self.alpha_th, x)

    def young_scale(self, x, hits):
        return float(np.max(_value(self.E, x)))


class CellChannels(MaterialModel):
    """Properties sampled from the material channels of the V-cell hit by each point.

    ``fields`` maps cell id to a :class:`MaterialField`; ``default`` serves
    cells without an entry.  Points whose membership result lacks a
    parameter are inverted on the model first.
    """

    def __init__(self, vmodel, fields: Mapping[int, MaterialField], default: MaterialField | None = None):
        self.vmodel = vmodel
        self.fields = dict(fields)
        self.default = default

    def _props(self, x, hits, required):
        if hits.cell is None or hits.param is None:
            hits = self.vmodel.locate(x)
        out = {k: np.zeros(len(x)) for k in required}
        for cid in np.unique(hits.cell):
            sel = np.flatnonzero(hits.cell == cid)
            if cid < 0:
                raise ValueError("material requested at a point outside every V-cell")
            fld = self.fields.get(int(cid), self.default)
            if fld is None:
                raise KeyError(f"no material bound to V-cell {cid}")
            vals = sample_material(fld, self.vmodel.cell(int(cid)).spline, hits.param[sel], required)
            for k in required:
                out[k][sel] = vals[k]
        return out

    def stiffness(self, x, hits):
        p = self._props(x, hits, ("E", "nu"))
        return isotropic_stiffness(p["E"], p["nu"])

    def conductivity(self, x, hits):
        return self._props(x, hits, ("kappa",))["kappa"]

    def expansion(self, x, hits):
        return self._props(x, hits, ("alpha_th",))["alpha_th"]

    def young_scale(self, x, hits):
        return float(np.max(self._props(x, hits, ("E",))["E"]))


class TableMaterial(MaterialModel):
    """Effective tensors interpolated from a lookup table.

    ``diameter`` and ``angle`` map physical points to the table axes.
    """

    def __init__(self, table: EffectiveTensorTable, diameter: Callable, angle: Callable):
        self.table, self.diameter, self.angle = table, diameter, angle

    def stiffness(self, x, hits):
        d = _value(self.diameter, x)
        a = _value(self.angle, x)
        out = np.empty((len(x), 6, 6))
        # memoize on the (rounded) table coordinates; fields are usually smooth
        keys = np.round(np.c_[d, a], 12)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        vals = np.array([np.asarray(self.table.query(*k)) for k in uniq])
        out[:] = vals[inv.reshape(-1)]
        return out


class Piecewise(MaterialModel):
    """Select one of several models by ``region(x) -> index``."""

    def __init__(self, region: Callable, models: list[MaterialModel]):
        self.region, self.models = region, models

    def _dispatch(self, name, x, hits, shape):
        idx = np.asarray(self.region(x), dtype=int).reshape(len(x))
        out = np.zeros((len(x),) + shape)
        for k, m in enumerate(self.models):
            sel = np.flatnonzero(idx == k)
            if sel.size:
                out[sel] = getattr(m, name)(x[sel], hits.subset(sel))
        return out

    def stiffness(self, x, hits):
        return self._dispatch("stiffness", x, hits, (6, 6))

    def conductivity(self, x, hits):
        return self._dispatch("conductivity", x, hits, ())

    def expansion(self, x, hits):
        return self._dispatch("expansion", x, hits, ())


def as_material(m) -> MaterialModel:
    if isinstance(m, MaterialModel):
        return m
    if isinstance(m, (IsotropicMaterial, ElasticityTensor)):
        return Homogeneous(m)
    raise TypeError(f"cannot use {type(m).__name__} as a material model")
