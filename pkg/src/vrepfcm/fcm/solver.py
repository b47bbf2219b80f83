"""Sparse symmetric positive-definite solves (CHOLMOD via cvxopt, SuperLU fallback)."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import lower_matvec, symmetric_from_lower

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """Factorization or solve failure, with a diagnostic message."""


class Factorization:
    """Cholesky factorization of a symmetric matrix given by its lower triangle."""

    def __init__(self, L: sps.spmatrix, method: str = "auto"):
        self.L = sps.csc_matrix(L)
        self.n = self.L.shape[0]
        self.method = method
        if method == "auto":
            method = "cholmod"
        if method == "cholmod":
            try:
                self._cholmod()
                self.method = "cholmod"
                return
            except ImportError:  # pragma: no cover - cvxopt is a hard dependency
                method = "splu"
        if method == "splu":
            self._splu()
            self.method = "splu"
            return
        raise ValueError(f"unknown factorization method {method!r}")

    def _cholmod(self):
        from cvxopt import cholmod, matrix, spmatrix

        # symmetric Jacobi scaling: penalty and fictitious entries differ by
        # many orders of magnitude, which breaks unscaled pivots
        d = self.L.diagonal()
        self._s = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 1.0)
        # build the cvxopt triplets one array at a time to bound peak memory
        L = self.L
        rows = np.asarray(L.indices, dtype=np.int64)
        cols = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(L.indptr))
        V = L.data * self._s[rows]
        V *= self._s[cols]
        V = matrix(V)
        I = matrix(rows)
        del rows
        J = matrix(cols)
        del cols
        A = spmatrix(V, I, J, (self.n, self.n))
        del V, I, J
        cholmod.options["supernodal"] = 2
        cholmod.options["postorder"] = True
        try:
            F = cholmod.symbolic(A, uplo="L")
            cholmod.numeric(A, F)
        except ArithmeticError as exc:
            raise NumericalError(f"Cholesky factorization failed: matrix not positive definite ({exc})") from exc
        del A
        self._F = F
        self._cm = (cholmod, matrix)

    def _splu(self):
        A = symmetric_from_lower(self.L).tocsc()
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:
            raise NumericalError(f"LU factorization failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self.method == "cholmod":
            cholmod, matrix = self._cm
            s = self._s[:, None]
            B = matrix(np.asfortranarray(b.reshape(self.n, -1) * s))
            cholmod.solve(self._F, B)
            x = (np.array(B) * s).reshape(b.shape)
        else:
            x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise NumericalError("solve produced non-finite values")
        return x


def relative_residual(L: sps.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    r = lower_matvec(L, x) - b
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(r) / (nb if nb > 0 else 1.0))
