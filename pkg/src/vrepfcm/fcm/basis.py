"""Integrated-Legendre hierarchic shape functions on [-1, 1]."""

from __future__ import annotations

import numpy as np


def legendre_table(xi: np.ndarray, n: int) -> np.ndarray:
    """``P_0..P_n`` at ``xi``; shape ``(n+1,) + xi.shape``."""
    xi = np.asarray(xi, dtype=float)
    P = np.empty((n + 1,) + xi.shape)
    P[0] = 1.0
    if n >= 1:
        P[1] = xi
    for k in range(1, n):
        P[k + 1] = ((2 * k + 1) * xi * P[k] - k * P[k - 1]) / (k + 1)
    return P


def shape_1d(xi, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the ``p+1`` local 1D functions.

    Order: the two vertex hats ``(1-xi)/2``, ``(1+xi)/2``, then the bubble
    modes ``N_i = (P_i - P_{i-2}) / sqrt(2(2i-1))`` for ``i = 2..p``.  Output
    shapes are ``xi.shape + (p+1,)``.
    """
    xi = np.asarray(xi, dtype=float)
    P = legendre_table(xi, max(p, 1))
    N = np.empty(xi.shape + (p + 1,))
    D = np.empty_like(N)
    N[..., 0] = 0.5 * (1 - xi)
    N[..., 1] = 0.5 * (1 + xi)
    D[..., 0] = -0.5
    D[..., 1] = 0.5
    for i in range(2, p + 1):
        N[..., i] = (P[i] - P[i - 2]) / np.sqrt(2.0 * (2 * i - 1))
        D[..., i] = np.sqrt((2 * i - 1) / 2.0) * P[i - 1]
    return N, D


def shape_3d(xi: np.ndarray, p: int, derivs: bool = True):
    """Tensor-product values ``(n, (p+1)^3)`` and gradients ``(n, 3, (p+1)^3)``.

    Local index ``a = ax + (p+1) * (ay + (p+1) * az)`` (x fastest).
    Gradients are with respect to the reference coordinates.
    """
    xi = np.atleast_2d(xi)
    n = xi.shape[0]
    Nx, Dx = shape_1d(xi[:, 0], p)
    Ny, Dy = shape_1d(xi[:, 1], p)
    Nz, Dz = shape_1d(xi[:, 2], p)
    k = p + 1

    def kron(a, b, c):
        return (c[:, :, None, None] * b[:, None, :, None] * a[:, None, None, :]).reshape(n, k**3)

    N = kron(Nx, Ny, Nz)
    if not derivs:
        return N, None
    G = np.stack([kron(Dx, Ny, Nz), kron(Nx, Dy, Nz), kron(Nx, Ny, Dz)], axis=1)
    return N, G


def gauss_1d(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_3d(order: int) -> tuple[np.ndarray, np.ndarray]:
    g, w = gauss_1d(order)
    X = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    W = np.einsum("i,j,k->ijk", w, w, w).reshape(-1)
    return X, W
