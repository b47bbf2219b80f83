"""Cartesian finite cell grid with tensor-product hierarchic dof maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def dof_map_1d(n: int, p: int, periodic: bool = False) -> np.ndarray:
    """Global 1D indices of the ``p+1`` local functions of each of ``n`` cells.

    Vertices come first (``n+1`` of them, or ``n`` when periodic, where the
    last vertex is identified with the first), then ``p-1`` modes per cell.
    """
    nv = n if periodic else n + 1
    c = np.arange(n)
    m = np.empty((n, p + 1), dtype=np.int64)
    m[:, 0] = c
    m[:, 1] = (c + 1) % nv if periodic else c + 1
    for k in range(2, p + 1):
        m[:, k] = nv + c * (p - 1) + (k - 2)
    return m


@dataclass(frozen=True, eq=False)
class FiniteCellMesh:
    """Extended domain ``[lo, hi]`` split into ``divisions`` cells of degree ``p``.

    ``periodic`` identifies opposite boundary vertices per direction, which
    gives the space of periodic fluctuations used for homogenization.
    """

    lo: np.ndarray
    hi: np.ndarray
    divisions: tuple[int, int, int]
    p: int
    periodic: tuple[bool, bool, bool] = (False, False, False)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3)
        hi = np.asarray(self.hi, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise ValueError("mesh box must have positive extent")
        div = tuple(int(d) for d in self.divisions)
        if len(div) != 3 or min(div) < 1:
            raise ValueError("divisions must be three positive integers")
        if self.p < 1:
            raise ValueError("polynomial degree must be >= 1")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "divisions", div)
        object.__setattr__(self, "periodic", tuple(bool(b) for b in self.periodic))

    @classmethod
    def around(cls, lo, hi, margin, divisions, p) -> "FiniteCellMesh":
        """Mesh whose box extends the box ``[lo, hi]`` by ``margin`` on every side."""
        m = np.broadcast_to(np.asarray(margin, dtype=float), (3,))
        return cls(np.asarray(lo, float) - m, np.asarray(hi, float) + m, divisions, p)

    @property
    def h(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.divisions)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.divisions))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def n_loc(self) -> int:
        return (self.p + 1) ** 3

    @cached_property
    def maps_1d(self) -> list[np.ndarray]:
        return [dof_map_1d(n, self.p, per) for n, per in zip(self.divisions, self.periodic)]

    @property
    def sizes_1d(self) -> tuple[int, int, int]:
        return tuple(int(m.max()) + 1 for m in self.maps_1d)

    @property
    def n_scalar(self) -> int:
        return int(np.prod(self.sizes_1d))

    def cell_index(self, ijk) -> np.ndarray:
        ijk = np.asarray(ijk)
        nx, ny, _ = self.divisions
        return ijk[..., 0] + nx * (ijk[..., 1] + ny * ijk[..., 2])

    def cell_ijk(self, c) -> np.ndarray:
        c = np.asarray(c)
        nx, ny, _ = self.divisions
        return np.stack([c % nx, (c // nx) % ny, c // (nx * ny)], axis=-1)

    def cell_box(self, c) -> tuple[np.ndarray, np.ndarray]:
        lo = self.lo + self.cell_ijk(c) * self.h
        return lo, lo + self.h

    def cell_centers(self) -> np.ndarray:
        lo, hi = self.cell_box(np.arange(self.n_cells))
        return 0.5 * (lo + hi)

    @cached_property
    def scalar_dofs(self) -> np.ndarray:
        """``(n_cells, (p+1)^3)`` global scalar indices, local index x fastest."""
        mx, my, mz = self.maps_1d
        sx, sy, _ = self.sizes_1d
        ijk = self.cell_ijk(np.arange(self.n_cells))
        gx = mx[ijk[:, 0]][:, None, None, :]
        gy = my[ijk[:, 1]][:, None, :, None]
        gz = mz[ijk[:, 2]][:, :, None, None]
        return (gx + sx * (gy + sy * gz)).reshape(self.n_cells, -1)

    def vector_dofs(self, ncomp: int = 3) -> np.ndarray:
        """Interleaved ``ncomp * scalar + component`` indices per cell."""
        s = self.scalar_dofs
        return (ncomp * s[:, :, None] + np.arange(ncomp)).reshape(len(s), -1)

    def locate(self, x: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
        """Cell index and reference coordinates of physical points.

        Raises ``ValueError`` for points outside the box.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rel = (x - self.lo) / self.h
        span = np.asarray(self.divisions)
        if np.any(rel < -tol * span) or np.any(rel > span * (1 + tol)):
            raise ValueError("evaluation point outside the mesh box")
        ijk = np.clip(np.floor(rel).astype(int), 0, span - 1)
        xi = 2.0 * (rel - ijk) - 1.0
        return self.cell_index(ijk), np.clip(xi, -1.0, 1.0)

    def to_physical(self, c, xi) -> np.ndarray:
        lo, _ = self.cell_box(c)
        return lo + 0.5 * (np.asarray(xi) + 1.0) * self.h

    def vertex_dof_scalar(self, ijk_vertex) -> int:
        """Scalar dof of the grid vertex with integer coordinates ``ijk_vertex``."""
        sx, sy, _ = self.sizes_1d
        idx = []
        for d in range(3):
            v = int(ijk_vertex[d])
            if self.periodic[d]:
                v %= self.divisions[d]
            idx.append(v)
        return idx[0] + sx * (idx[1] + sy * idx[2])

    def boundary_dofs(self, ncomp: int = 1) -> np.ndarray:
        """Dofs (interleaved for ``ncomp``) whose functions do not vanish on the box faces.

        Only the two end vertex hats of each non-periodic direction reach the faces.
        """
        ends = []
        for m, per in zip(self.maps_1d, self.periodic):
            ends.append(np.zeros(0, dtype=np.int64) if per else np.array([m[0][0], m[-1][1]]))
        sx, sy, sz = self.sizes_1d
        on = np.zeros((sz, sy, sx), dtype=bool)
        on[:, :, ends[0]] = True
        on[:, ends[1], :] = True
        on[ends[2], :, :] = True
        s = np.flatnonzero(on.reshape(-1))
        return (ncomp * s[:, None] + np.arange(ncomp)).reshape(-1)

    def interpolate_affine(self, A: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
        """Coefficients (interleaved, ``ncomp = A.shape[0]``) of ``x -> A x + b``.

        Only valid on non-periodic meshes; the hierarchic modes stay zero
        because vertex interpolation reproduces affine fields.
        """
        if any(self.periodic):
            raise ValueError("affine fields are not periodic")
        A = np.atleast_2d(A)
        ncomp = A.shape[0]
        b = np.zeros(ncomp) if b is None else np.asarray(b, dtype=float)
        u = np.zeros(self.n_scalar * ncomp)
        nx, ny, nz = self.divisions
        sx, sy, _ = self.sizes_1d
        I, J, K = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), np.arange(nz + 1), indexing="ij")
        s = (I + sx * (J + sy * K)).ravel()
        X = self.lo + np.stack([I.ravel(), J.ravel(), K.ravel()], axis=1) * self.h
        vals = X @ A.T + b
        for c in range(ncomp):
            u[ncomp * s + c] = vals[:, c]
        return u
