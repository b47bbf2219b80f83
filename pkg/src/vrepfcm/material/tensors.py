"""Voigt elasticity tensors, isotropic materials, Bond rotation about z and symmetry classes.

Voigt order is (11, 22, 33, 12, 23, 13).  Strains use engineering shear
(gamma = 2 eps), stresses are plain, so ``sigma = C @ eps`` with a symmetric ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..units import UnitError, convert

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2))


@dataclass(frozen=True)
class IsotropicMaterial:
    """Isotropic solid. Defaults: stress in kN/cm^2, conductivity W/(cm K)."""

    E: float
    nu: float
    kappa: float = 0.0
    alpha_th: float = 0.0
    unit: str = "kN/cm^2"

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("E must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ValueError("Poisson ratio must lie in (-1, 0.5)")
        if self.kappa < 0:
            raise ValueError("conductivity must be nonnegative")

    @property
    def lame(self) -> tuple[float, float]:
        lam = self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))
        mu = self.E / (2 * (1 + self.nu))
        return lam, mu

    def scaled(self, E_factor: float = 1.0, kappa_factor: float = 1.0) -> "IsotropicMaterial":
        return IsotropicMaterial(
            self.E * E_factor, self.nu, self.kappa * kappa_factor, self.alpha_th, self.unit
        )


# Table values for the thermal tile example (kN/cm^2, W/(cm K), 1/K)
TITANIUM = IsotropicMaterial(E=11600.0, nu=0.36, kappa=0.216, alpha_th=8.6e-6)
POROUS_SILICA = IsotropicMaterial(E=634.0, nu=0.17, kappa=2.3e-3, alpha_th=6.5e-7)


class ElasticityTensor:
    """Symmetric 6x6 Voigt stiffness with a unit tag."""

    __slots__ = ("_C", "unit")

    def __init__(self, C, unit: str = "kN/cm^2", check: bool = True):
        C = np.array(C, dtype=float)
        if C.shape != (6, 6):
            raise ValueError(f"elasticity tensor must be 6x6, got {C.shape}")
        if check:
            scale = max(np.abs(C).max(), 1e-300)
            if np.abs(C - C.T).max() > 1e-9 * scale:
                raise ValueError("elasticity tensor is not symmetric")
        C = 0.5 * (C + C.T)
        C.setflags(write=False)
        self._C = C
        self.unit = unit

    @property
    def C(self) -> np.ndarray:
        return self._C

    def __array__(self, dtype=None, copy=None):
        return self._C if dtype is None else self._C.astype(dtype)

    def __getitem__(self, idx):
        return self._C[idx]

    def __repr__(self):
        return f"ElasticityTensor(unit={self.unit!r},\n{format_tensor(self._C)})"

    def _check_unit(self, other: "ElasticityTensor"):
        if self.unit != other.unit:
            raise UnitError(f"unit mismatch: {self.unit!r} vs {other.unit!r}")

    def __add__(self, other: "ElasticityTensor") -> "ElasticityTensor":
        self._check_unit(other)
        return ElasticityTensor(self._C + other._C, self.unit)

    def __sub__(self, other: "ElasticityTensor") -> "ElasticityTensor":
        self._check_unit(other)
        return ElasticityTensor(self._C - other._C, self.unit)

    def __mul__(self, k: float) -> "ElasticityTensor":
        return ElasticityTensor(self._C * float(k), self.unit)

    __rmul__ = __mul__

    def to(self, unit: str) -> "ElasticityTensor":
        return ElasticityTensor(convert(self._C, self.unit, unit), unit)

    def is_positive_definite(self) -> bool:
        return bool(np.linalg.eigvalsh(self._C).min() > 0)

    def allclose(self, other: "ElasticityTensor", rtol: float) -> bool:
        self._check_unit(other)
        return bool(np.abs(self._C - other._C).max() <= rtol * np.abs(other._C).max())

    def rotate(self, angle_deg: float) -> "ElasticityTensor":
        return rotate_tensor(self, angle_deg)

    def full(self) -> np.ndarray:
        """Fourth-order tensor ``C_ijkl`` (tensorial indices)."""
        return voigt_to_full(self._C)


def isotropic_to_voigt(m: IsotropicMaterial | float, nu: float | None = None, unit: str | None = None):
    """Voigt stiffness of an isotropic material (engineering shear columns)."""
    if not isinstance(m, IsotropicMaterial):
        m = IsotropicMaterial(float(m), float(nu), unit=unit or "kN/cm^2")
    lam, mu = m.lame
    C = np.zeros((6, 6))
    C[:3, :3] = lam
    C[np.arange(3), np.arange(3)] = lam + 2 * mu
    C[np.arange(3, 6), np.arange(3, 6)] = mu
    return ElasticityTensor(C, m.unit)


def voigt_to_full(C: np.ndarray) -> np.ndarray:
    full = np.zeros((3, 3, 3, 3))
    for I, (i, j) in enumerate(VOIGT_PAIRS):
        for J, (k, l) in enumerate(VOIGT_PAIRS):
            v = C[I, J]
            for a, b in ((i, j), (j, i)):
                for c, d in ((k, l), (l, k)):
                    full[a, b, c, d] = v
    return full


def gibson_ashby(phi: float) -> dict[str, float]:
    """Relative stiffness and conductivity of a porous solid with porosity ``phi``."""
    if not 0.0 <= phi < 1.0:
        raise ValueError("porosity must lie in [0, 1)")
    rho = 1.0 - phi
    return {"E_r": rho**2, "kappa_r": rho**1.5}


def porous(solid: IsotropicMaterial, phi: float) -> IsotropicMaterial:
    f = gibson_ashby(phi)
    return solid.scaled(f["E_r"], f["kappa_r"])


# ---------------------------------------------------------------------------
# rotation about z


def bond_matrices(angle_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Bond stress (M) and strain (N) matrices for a rotation by ``angle_deg`` about z."""
    a = np.deg2rad(angle_deg)
    c, s = np.cos(a), np.sin(a)
    c2, s2 = c * c, s * s
    sn2, cs2 = np.sin(2 * a), np.cos(2 * a)
    M = np.zeros((6, 6))
    M[0, [0, 1, 3]] = c2, s2, sn2
    M[1, [0, 1, 3]] = s2, c2, -sn2
    M[2, 2] = 1.0
    M[3, [0, 1, 3]] = -sn2 / 2, sn2 / 2, cs2
    M[4, [4, 5]] = c, -s
    M[5, [4, 5]] = s, c
    N = np.zeros((6, 6))
    N[0, [0, 1, 3]] = c2, s2, sn2 / 2
    N[1, [0, 1, 3]] = s2, c2, -sn2 / 2
    N[2, 2] = 1.0
    N[3, [0, 1, 3]] = -sn2, sn2, cs2
    N[4, [4, 5]] = c, -s
    N[5, [4, 5]] = s, c
    return M, N


def rotate_tensor(C, angle_deg: float) -> ElasticityTensor:
    """``C' = M C N^-1``; returns a tensor with the same unit tag."""
    unit = C.unit if isinstance(C, ElasticityTensor) else "kN/cm^2"
    M, N = bond_matrices(angle_deg)
    Cr = M @ np.asarray(C, dtype=float) @ np.linalg.inv(N)
    return ElasticityTensor(Cr, unit)


# ---------------------------------------------------------------------------
# symmetry classes

SYMMETRY_ORDER = ("isotropic", "cubic", "tetragonal", "orthotropic", "none")

_ORTHO_ZERO = [(i, j) for i in range(3) for j in range(3, 6)] + [(3, 4), (3, 5), (4, 5)]
# (normal pair that must match, off-diagonal pair, shear pair) per unique axis
_TETRA = {
    "x": ((1, 2), ((0, 1), (0, 2)), (3, 5)),
    "y": ((0, 2), ((0, 1), (1, 2)), (3, 4)),
    "z": ((0, 1), ((0, 2), (1, 2)), (4, 5)),
}


def _eq(a: float, b: float, tol: float, floor: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), floor)


def symmetry_details(C, tol: float = 1e-4) -> dict:
    """Which constraint sets hold; ``tetragonal_axes`` lists the unique axes found."""
    C = np.asarray(C, dtype=float)
    scale = np.abs(C).max()
    floor = 1e-300
    ortho = all(abs(C[i, j]) <= tol * scale for i, j in _ORTHO_ZERO)
    axes = []
    if ortho:
        for ax, ((a, b), (p, q), (g, h)) in _TETRA.items():
            if (
                _eq(C[a, a], C[b, b], tol, floor)
                and _eq(C[p], C[q], tol, floor)
                and _eq(C[g, g], C[h, h], tol, floor)
            ):
                axes.append(ax)
    d, od, sh = np.diag(C)[:3], (C[0, 1], C[1, 2], C[0, 2]), np.diag(C)[3:]
    cubic = (
        ortho
        and all(_eq(d[0], x, tol, floor) for x in d[1:])
        and all(_eq(od[0], x, tol, floor) for x in od[1:])
        and all(_eq(sh[0], x, tol, floor) for x in sh[1:])
    )
    iso = cubic and _eq(sh.mean(), 0.5 * (d.mean() - np.mean(od)), tol, floor)
    return {"orthotropic": ortho, "tetragonal_axes": axes, "cubic": cubic, "isotropic": iso}


def classify_symmetry(C, tol: float = 1e-4) -> str:
    """Strictest of isotropic, cubic, tetragonal, orthotropic, none (in the given frame).

    Equalities are checked relative to the larger magnitude of each pair and
    vanishing entries relative to ``max |C_ij|``.
    """
    det = symmetry_details(C, tol)
    if det["isotropic"]:
        return "isotropic"
    if det["cubic"]:
        return "cubic"
    if det["tetragonal_axes"]:
        return "tetragonal"
    if det["orthotropic"]:
        return "orthotropic"
    return "none"


def has_symmetry(C, cls: str, tol: float = 1e-4) -> bool:
    """True if ``C`` satisfies ``cls`` or something stricter (isotropy implies cubic)."""
    if cls not in SYMMETRY_ORDER:
        raise ValueError(f"unknown symmetry class {cls!r}")
    return SYMMETRY_ORDER.index(classify_symmetry(C, tol)) <= SYMMETRY_ORDER.index(cls)


# ---------------------------------------------------------------------------
# text IO in 6x6 block layout


def format_tensor(C, fmt: str = "{:14.6f}") -> str:
    C = np.asarray(C, dtype=float)
    return "\n".join(" ".join(fmt.format(v) for v in row) for row in C)


def parse_tensor(text: str, unit: str = "kN/cm^2") -> ElasticityTensor:
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    vals = np.array([[float(v) for v in r] for r in rows])
    if vals.shape != (6, 6):
        raise ValueError(f"expected a 6x6 block, got shape {vals.shape}")
    return ElasticityTensor(vals, unit)
