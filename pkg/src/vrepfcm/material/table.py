"""Lookup table of effective tensors over (rod diameter, rotation angle)."""

from __future__ import annotations

import json

import numpy as np

from ..spline_core import KnotVector, design_matrix
from .tensors import ElasticityTensor, rotate_tensor

# upper-triangle Voigt entries that may be nonzero for a tile with z-mirror
# symmetry rotated about z (13 independent coefficients)
PATTERN = (
    (0, 0), (0, 1), (0, 2), (0, 3),
    (1, 1), (1, 2), (1, 3),
    (2, 2), (2, 3),
    (3, 3),
    (4, 4), (4, 5),
    (5, 5),
)
_MASK = np.zeros((6, 6), dtype=bool)
for _i, _j in PATTERN:
    _MASK[_i, _j] = _MASK[_j, _i] = True


def interpolation_knots(t: np.ndarray, degree: int) -> KnotVector:
    """Clamped knots for interpolation at sites ``t`` by parameter averaging."""
    n = len(t)
    inner = [np.mean(t[j : j + degree]) for j in range(1, n - degree)]
    return KnotVector(np.r_[[t[0]] * (degree + 1), inner, [t[-1]] * (degree + 1)], degree)


class _Interp1D:
    def __init__(self, t: np.ndarray, mode: str):
        self.t = np.asarray(t, dtype=float)
        self.mode = mode
        if mode == "linear" or len(t) == 2:
            self.kv = KnotVector(np.r_[t[0], t, t[-1]], 1)
            self.inv = np.eye(len(t))
        else:
            self.kv = interpolation_knots(self.t, min(3, len(t) - 1))
            self.inv = np.linalg.inv(design_matrix(self.kv, self.t))

    def weights(self, x) -> np.ndarray:
        """Row vector mapping node data to the interpolant value at ``x``."""
        return design_matrix(self.kv, np.atleast_1d(x)) @ self.inv


class EffectiveTensorTable:
    """Grid of tensors ``entries[i, j]`` at ``diameters[i]`` and ``angles[j]`` (degrees)."""

    def __init__(self, diameters, angles, entries, unit="kN/cm^2", mode="cubic", tol=1e-6):
        self.diameters = np.asarray(diameters, dtype=float)
        self.angles = np.asarray(angles, dtype=float)
        self.entries = np.asarray(entries, dtype=float)
        self.unit = unit
        self.mode = mode
        self.tol = tol
        if mode not in ("cubic", "linear"):
            raise ValueError(f"unknown interpolation mode {mode!r}")
        nd, na = len(self.diameters), len(self.angles)
        if self.entries.shape != (nd, na, 6, 6) or not np.all(np.isfinite(self.entries)):
            raise ValueError("table grid incomplete")
        for ax, nm in ((self.diameters, "diameter"), (self.angles, "angle")):
            if len(ax) < 2 or np.any(np.diff(ax) <= 0):
                raise ValueError(f"{nm} axis must be strictly increasing with >= 2 samples")
        self._fd = _Interp1D(self.diameters, mode)
        self._fa = _Interp1D(self.angles, mode)

    def query(self, diameter: float, angle: float) -> ElasticityTensor:
        for v, ax, nm in ((diameter, self.diameters, "diameter"), (angle, self.angles, "angle")):
            if not ax[0] - 1e-12 <= v <= ax[-1] + 1e-12:
                raise ValueError(f"{nm} {v} outside table range [{ax[0]}, {ax[-1]}]")
        wd = self._fd.weights(np.clip(diameter, *self.diameters[[0, -1]]))[0]
        wa = self._fa.weights(np.clip(angle, *self.angles[[0, -1]]))[0]
        C = np.einsum("i,j,ijkl->kl", wd, wa, self.entries)
        C = 0.5 * (C + C.T)
        scale = np.abs(C).max()
        off = ~_MASK & (np.abs(C) <= self.tol * max(scale, 1e-300))
        C[off] = 0.0
        return ElasticityTensor(C, self.unit)

    def to_dict(self) -> dict:
        return {
            "axes": {"diameter": self.diameters.tolist(), "angle": self.angles.tolist()},
            "entries": [
                [self.entries[i, j].reshape(-1).tolist() for j in range(len(self.angles))]
                for i in range(len(self.diameters))
            ],
            "unit": self.unit,
            "interpolation": self.mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EffectiveTensorTable":
        diam, ang = d["axes"]["diameter"], d["axes"]["angle"]
        ent = np.asarray(d["entries"], dtype=float).reshape(len(diam), len(ang), 6, 6)
        return cls(diam, ang, ent, d.get("unit", "kN/cm^2"), d.get("interpolation", "cubic"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EffectiveTensorTable":
        return cls.from_dict(json.loads(text))


def build_table(samples, angles=None, mode: str = "cubic") -> EffectiveTensorTable:
    """Table from unrotated tensors ``[(diameter, ElasticityTensor), ...]``.

    Items may also be ``(diameter, angle, tensor)`` with angle 0.  The angle
    axis (default 0..90 deg in 7.5 deg steps) is filled by rotation.
    """
    if angles is None:
        angles = np.arange(0.0, 90.0 + 1e-9, 7.5)
    rows = []
    for s in samples:
        if len(s) == 3:
            d, a, C = s
            if abs(a) > 1e-12:
                raise ValueError("table samples must be unrotated (angle 0)")
        else:
            d, C = s
        rows.append((float(d), C))
    rows.sort(key=lambda r: r[0])
    diam = np.array([r[0] for r in rows])
    if len(diam) < 2:
        raise ValueError("need at least two diameter samples")
    if np.any(np.diff(diam) == 0):
        raise ValueError("duplicate diameters in table samples")
    units = {getattr(r[1], "unit", "kN/cm^2") for r in rows}
    if len(units) != 1:
        raise ValueError(f"mixed units in table samples: {sorted(units)}")
    ent = np.array([[np.asarray(rotate_tensor(C, a)) for a in angles] for _, C in rows])
    return EffectiveTensorTable(diam, angles, ent, units.pop(), mode)


def query_table(t: EffectiveTensorTable, diameter: float, angle: float) -> ElasticityTensor:
    return t.query(diameter, angle)
