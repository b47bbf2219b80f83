"""Material channels on trivariate splines: least-squares fitting and sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping

import numpy as np

from ..spline_core import TrivariateSpline, design_matrix
from .tensors import IsotropicMaterial


class RankDeficientError(ValueError):
    """The sampled collocation matrix does not determine the coefficients."""

    def __init__(self, direction: str, rank: int, cols: int):
        super().__init__(
            f"least-squares system rank deficient in direction {direction!r}: rank {rank} < {cols}"
        )
        self.direction = direction


def _pinv_checked(A: np.ndarray, direction: str) -> np.ndarray:
    if A.shape[1] == 0:
        return np.zeros((0, A.shape[0]))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    tol = max(A.shape) * np.finfo(float).eps * s[0]
    rank = int(np.sum(s > tol))
    if rank < A.shape[1]:
        raise RankDeficientError(direction, rank, A.shape[1])
    return (Vt.T / s) @ U.T


def _apply(mats, X: np.ndarray) -> np.ndarray:
    """Apply one matrix per axis of ``X`` (Kronecker product without forming it)."""
    for ax, M in enumerate(mats):
        X = np.moveaxis(np.tensordot(M, X, axes=(1, ax)), 0, ax)
    return X


def sample_grid(sp: TrivariateSpline, n_samples) -> list[np.ndarray]:
    n = np.broadcast_to(np.asarray(n_samples, dtype=int), (3,))
    return [np.linspace(*kv.domain, int(k)) for kv, k in zip(sp.knots, n)]


def _sample_target(sp: TrivariateSpline, A, f) -> np.ndarray:
    # geometry on the sample grid via separable collocation matrices
    X = np.stack([_apply(A, sp.ctrl[..., c]) for c in range(3)], axis=-1)
    shape = X.shape[:3]
    return np.asarray(f(X.reshape(-1, 3)), dtype=float).reshape(shape)


def fit_least_squares(
    sp: TrivariateSpline,
    f: Callable[[np.ndarray], np.ndarray],
    n_samples=100,
    mode: str = "clamped",
) -> np.ndarray:
    """Material coordinates ``mu[i, j, k]`` fitted to ``f`` on a uniform parameter grid.

    ``f`` receives physical points ``(N, 3)``.  ``n_samples`` counts samples per
    parameter direction.  In ``"clamped"`` mode the control values on the
    patch corners are interpolated, then edges, faces and the interior are
    fitted in turn with the lower-dimensional values held fixed, so the field
    matches ``f`` at the corners exactly and each boundary curve/face depends
    only on data on that curve/face.  ``"free"`` solves the plain tensor
    least-squares problem over all samples.
    """
    axes = sample_grid(sp, n_samples)
    names = "uvw"
    for kv, t, nm in zip(sp.knots, axes, names):
        if len(t) < kv.n:
            raise ValueError(f"{len(t)} samples in {nm} < {kv.n} basis functions")
    A = [design_matrix(kv, t) for kv, t in zip(sp.knots, axes)]
    F = _sample_target(sp, A, f)

    if mode == "free":
        P = [_pinv_checked(a, nm) for a, nm in zip(A, names)]
        return _apply(P, F)
    if mode != "clamped":
        raise ValueError(f"unknown fit mode {mode!r}")

    dims = sp.dims
    # per direction: end indices (interpolated) and interior indices (fitted)
    ends, inner = [], []
    for kv in sp.knots:
        if kv.degree == 0 or kv.n < 2:
            ends.append([])
            inner.append(np.arange(kv.n))
        else:
            ends.append([0, kv.n - 1])
            inner.append(np.arange(1, kv.n - 1))
    sample_end = lambda d, e: 0 if e == 0 else len(axes[d]) - 1  # noqa: E731
    mu = np.zeros(dims)
    for free_dirs in sorted(
        (s for s in product((0, 1), repeat=3)), key=lambda s: sum(s)
    ):
        fixed = [d for d in range(3) if not free_dirs[d]]
        if any(not ends[d] for d in fixed):
            continue
        if any(free_dirs[d] and len(inner[d]) == 0 for d in range(3)):
            continue
        for choice in product(*[ends[d] for d in fixed]):
            cidx = [slice(None)] * 3
            sidx = [slice(None)] * 3
            for d, e in zip(fixed, choice):
                cidx[d] = slice(e, e + 1)
                sidx[d] = slice(sample_end(d, e), sample_end(d, e) + 1)
            Fs = F[tuple(sidx)]
            mats = [A[d] if free_dirs[d] else np.ones((1, 1)) for d in range(3)]
            block = mu[tuple(cidx)].copy()
            ii = [inner[d] if free_dirs[d] else np.array([0]) for d in range(3)]
            block[np.ix_(*ii)] = 0.0
            R = Fs - _apply(mats, block)
            P = [
                _pinv_checked(A[d][:, inner[d]], names[d]) if free_dirs[d] else np.ones((1, 1))
                for d in range(3)
            ]
            sub = _apply(P, R)
            block[np.ix_(*ii)] = sub
            mu[tuple(cidx)] = block
    return mu


def fit_residual(sp: TrivariateSpline, mu: np.ndarray, f, n_samples) -> float:
    """RMS misfit of the coefficient field ``mu`` against ``f`` on a uniform grid."""
    axes = sample_grid(sp, n_samples)
    A = [design_matrix(kv, t) for kv, t in zip(sp.knots, axes)]
    F = _sample_target(sp, A, f)
    return float(np.sqrt(np.mean((_apply(A, mu) - F) ** 2)))


def attach_channel(sp: TrivariateSpline, name: str, mu: np.ndarray) -> TrivariateSpline:
    """Copy of ``sp`` with channel ``name`` set (added or replaced) to ``mu``."""
    mu = np.asarray(mu, dtype=float).reshape(sp.dims + (1,))
    names = list(sp.channel_names)
    ctrl = np.array(sp.ctrl)
    if name in names:
        ctrl[..., 3 + names.index(name)] = mu[..., 0]
        return TrivariateSpline(sp.knots, ctrl, tuple(names))
    return TrivariateSpline(sp.knots, np.concatenate([ctrl, mu], axis=-1), tuple(names + [name]))


# ---------------------------------------------------------------------------
# per-cell material bindings


PROPERTIES = ("E", "nu", "kappa", "alpha_th")


@dataclass(frozen=True)
class MaterialField:
    """Property sources for one V-cell.

    ``bindings`` maps a property (``E``, ``nu``, ``kappa``, ``alpha_th``) to a
    spline channel; ``constants`` supply the remaining properties.
    """

    bindings: Mapping[str, str] = field(default_factory=dict)
    constants: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def constant(cls, m: IsotropicMaterial) -> "MaterialField":
        return cls({}, {"E": m.E, "nu": m.nu, "kappa": m.kappa, "alpha_th": m.alpha_th})

    def validate(self, sp: TrivariateSpline | None):
        for prop, ch in self.bindings.items():
            if sp is None or ch not in sp.channel_names:
                raise KeyError(f"property {prop!r} bound to missing channel {ch!r}")


def sample_material(
    fld: MaterialField,
    sp: TrivariateSpline | None,
    params,
    required=("E", "nu"),
) -> dict[str, np.ndarray]:
    """Property values at parameter points ``(N, 3)`` of a cell.

    Channel-bound properties come from the spline evaluation, the rest from
    the constants.  Missing required properties raise ``KeyError``.
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    out: dict[str, np.ndarray] = {}
    if fld.bindings:
        fld.validate(sp)
        vals = sp.evaluate(params)
        for prop, ch in fld.bindings.items():
            out[prop] = vals[:, 3 + sp.channel_names.index(ch)]
    for prop, v in fld.constants.items():
        out.setdefault(prop, np.full(len(params), float(v)))
    missing = [p for p in required if p not in out]
    if missing:
        raise KeyError(f"unbound material properties: {missing}")
    return out
