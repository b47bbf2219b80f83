"""Sparse assembly of stiffness, conductivity and load terms (lower triangle, CSC)."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps

from .basis import shape_3d
from .mesh import FiniteCellMesh


class LowerPattern:
    """Lower-triangular CSC sparsity of a mesh with ``ncomp`` interleaved components."""

    def __init__(self, cell_dofs: np.ndarray, ncomp: int, n_scalar: int):
        self.ncomp = ncomp
        self.N = n_scalar * ncomp
        self.cell_dofs = cell_dofs
        s = np.asarray(cell_dofs, dtype=np.int64)
        nl = s.shape[1]
        ia, ib = np.tril_indices(nl)
        # scalar pattern, unordered pairs (max, min)
        keys = []
        for chunk in np.array_split(np.arange(len(s)), max(1, len(s) // 256)):
            a, b = s[chunk][:, ia], s[chunk][:, ib]
            hi, lo = np.maximum(a, b), np.minimum(a, b)
            keys.append(np.unique(lo * n_scalar + hi))
        skeys = np.unique(np.concatenate(keys))
        scol, srow = np.divmod(skeys, n_scalar)
        # expand to components: rows ncomp*srow + i, cols ncomp*scol + j, keep row >= col
        i, j = np.meshgrid(np.arange(ncomp), np.arange(ncomp), indexing="ij")
        i, j = i.ravel(), j.ravel()
        rows = (ncomp * srow[:, None] + i[None]).ravel()
        cols = (ncomp * scol[:, None] + j[None]).ravel()
        keep = rows >= cols
        rows, cols = rows[keep], cols[keep]
        keys = np.sort(cols * self.N + rows)
        del rows, cols, keep
        itype = np.int32 if len(keys) < 2**31 - 1 else np.int64
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(keys // self.N, minlength=self.N))]).astype(itype)
        self.indices = (keys % self.N).astype(itype)
        self._keys = keys

    @property
    def keys(self) -> np.ndarray:
        """Sorted ``col * N + row`` codes of the stored entries (rebuilt on demand)."""
        if self._keys is None:
            cols = np.repeat(np.arange(self.N, dtype=np.int64), np.diff(self.indptr))
            self._keys = cols * self.N + self.indices
        return self._keys

    def release(self):
        """Drop the lookup codes once assembly is done; they are as large as the matrix."""
        self._keys = None

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def positions(self, gdofs: np.ndarray):
        """Positions of the lower entries of an element block and the local mask."""
        r = gdofs[:, None]
        c = gdofs[None, :]
        mask = r >= c
        k = (np.broadcast_to(c, mask.shape)[mask] * self.N + np.broadcast_to(r, mask.shape)[mask])
        pos = np.searchsorted(self.keys, k)
        return pos, mask

    def matrix(self, data: np.ndarray) -> sps.csc_matrix:
        return sps.csc_matrix((data, self.indices, self.indptr), shape=(self.N, self.N))


def symmetric_from_lower(L: sps.spmatrix) -> sps.csr_matrix:
    L = sps.csr_matrix(L)
    return (L + L.T - sps.diags(L.diagonal())).tocsr()


def lower_matvec(L: sps.spmatrix, x: np.ndarray) -> np.ndarray:
    return L @ x + L.T @ x - L.diagonal()[:, None] * x if x.ndim == 2 else L @ x + L.T @ x - L.diagonal() * x


# ---------------------------------------------------------------------------
# strain-displacement operators


def strain_operator(G: np.ndarray) -> np.ndarray:
    """``B (n, 6, 3*nl)`` from physical gradients ``G (n, 3, nl)``; Voigt, engineering shear."""
    n, _, nl = G.shape
    B = np.zeros((n, 6, nl, 3))
    gx, gy, gz = G[:, 0], G[:, 1], G[:, 2]
    B[:, 0, :, 0] = gx
    B[:, 1, :, 1] = gy
    B[:, 2, :, 2] = gz
    B[:, 3, :, 0] = gy
    B[:, 3, :, 1] = gx
    B[:, 4, :, 1] = gz
    B[:, 4, :, 2] = gy
    B[:, 5, :, 0] = gz
    B[:, 5, :, 2] = gx
    return B.reshape(n, 6, 3 * nl)


def cell_shape(mesh: FiniteCellMesh, xi: np.ndarray):
    """Shape values and physical gradients at reference points of a cell."""
    N, G = shape_3d(xi, mesh.p)
    G = G * (2.0 / mesh.h)[None, :, None]
    return N, G


def element_stiffness(B: np.ndarray, C: np.ndarray, w: np.ndarray) -> np.ndarray:
    CB = np.einsum("nij,njk->nik", C * w[:, None, None], B)
    return B.reshape(-1, B.shape[2]).T @ CB.reshape(-1, B.shape[2])


def element_conductivity(G: np.ndarray, kappa: np.ndarray, w: np.ndarray) -> np.ndarray:
    Gw = G * (kappa * w)[:, None, None]
    nl = G.shape[2]
    return np.transpose(G, (1, 0, 2)).reshape(-1, nl).T @ np.transpose(Gw, (1, 0, 2)).reshape(-1, nl)


class Accumulator:
    """Adds element matrices into lower CSC data arrays (several channels)."""

    def __init__(self, pattern: LowerPattern, channels=("K",)):
        self.pattern = pattern
        self.data = {ch: np.zeros(pattern.nnz) for ch in channels}
        self._cache: dict[int, tuple] = {}

    def add(self, channel: str, cell: int, gdofs: np.ndarray, Ke: np.ndarray):
        hit = self._cache.get(cell)
        if hit is None:
            pos, mask = self.pattern.positions(gdofs)
            hit = (pos, mask, len(np.unique(gdofs)) != len(gdofs))
            self._cache = {cell: hit}
        pos, mask, dup = hit
        if dup:
            np.add.at(self.data[channel], pos, Ke[mask])
        else:
            self.data[channel][pos] += Ke[mask]

    def matrix(self, channel: str = "K") -> sps.csc_matrix:
        return self.pattern.matrix(self.data[channel])
