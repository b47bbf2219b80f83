"""B-spline basis machinery, bivariate surfaces and trivariate volume splines.

Control grids are stored as dense arrays ``ctrl[i, j, k, :]``; the exchange
format flattens them lexicographically with ``i`` running fastest.  The first
three control-point coordinates are geometry, any further entries are material
channels that ride along through evaluation and refinement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree


class DomainError(ValueError):
    """Parameter outside the knot range."""


# ---------------------------------------------------------------------------
# knot vectors and basis functions


@dataclass(frozen=True, eq=False)
class KnotVector:
    values: np.ndarray
    degree: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        p = int(self.degree)
        object.__setattr__(self, "degree", p)
        if p < 0:
            raise ValueError("degree must be nonnegative")
        if v.ndim != 1 or np.any(np.diff(v) < 0):
            raise ValueError("knot values must be a nondecreasing sequence")
        n = len(v) - p - 1
        if n < p + 1:
            raise ValueError(f"need at least {2 * p + 2} knots for degree {p}, got {len(v)}")
        if not (np.all(v[: p + 1] == v[0]) and np.all(v[-p - 1 :] == v[-1])) or v[p + 1] == v[0] or v[-p - 2] == v[-1]:
            raise ValueError("knot vector must be clamped (end multiplicity degree+1)")
        if v[-1] <= v[0]:
            raise ValueError("knot vector has an empty parameter range")
        _, counts = np.unique(v, return_counts=True)
        if counts[1:-1].size and counts[1:-1].max() > p + 1:
            raise ValueError("interior knot multiplicity exceeds degree+1")

    @classmethod
    def uniform(cls, degree: int, n_spans: int = 1, lo: float = 0.0, hi: float = 1.0) -> "KnotVector":
        inner = np.linspace(lo, hi, n_spans + 1)[1:-1]
        return cls(np.r_[[lo] * (degree + 1), inner, [hi] * (degree + 1)], degree)

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return len(self.values) - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.values)

    def multiplicity(self, t: float) -> int:
        return int(np.sum(np.abs(self.values - t) <= 1e-14 * max(1.0, abs(t))))

    def greville(self) -> np.ndarray:
        p = self.degree
        if p == 0:
            return 0.5 * (self.values[:-1] + self.values[1:])
        idx = np.arange(self.n)[:, None] + np.arange(1, p + 1)[None, :]
        return self.values[idx].mean(axis=1)

    def __eq__(self, other):
        return (
            isinstance(other, KnotVector)
            and self.degree == other.degree
            and self.values.shape == other.values.shape
            and bool(np.all(self.values == other.values))
        )

    def __hash__(self):
        return hash((self.degree, self.values.tobytes()))

    def __repr__(self):
        return f"KnotVector({self.values.tolist()}, degree={self.degree})"


def _check_range(kv: KnotVector, t: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    lo, hi = kv.domain
    slack = tol * (hi - lo)
    if np.any(~np.isfinite(t)) or np.any(t < lo - slack) or np.any(t > hi + slack):
        bad = t[(t < lo - slack) | (t > hi + slack) | ~np.isfinite(t)]
        raise DomainError(f"parameter {bad.ravel()[0]!r} outside knot range [{lo}, {hi}]")
    return np.clip(t, lo, hi)


def find_span(kv: KnotVector, t) -> np.ndarray:
    """Knot span index ``k`` with ``U[k] <= t < U[k+1]`` (last span closed)."""
    t = np.asarray(t, dtype=float)
    k = np.searchsorted(kv.values, t, side="right") - 1
    return np.clip(k, kv.degree, kv.n - 1)


def basis_funs(kv: KnotVector, t) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero basis values at ``t`` (Cox-de Boor, vectorized over ``t``).

    Returns ``(span, N)`` with ``N`` of shape ``t.shape + (p+1,)``; entry ``a``
    belongs to basis function ``span - p + a``.
    """
    t = np.asarray(t, dtype=float)
    shape = t.shape
    tt = _check_range(kv, t.ravel())
    span, ders = _basis_ders(kv, tt, 0)
    return span.reshape(shape), ders[:, 0].reshape(shape + (kv.degree + 1,))


def basis_funs_ders(kv: KnotVector, t, nders: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Basis values and derivatives up to ``nders``; shape ``(len(t), nders+1, p+1)``."""
    tt = _check_range(kv, np.atleast_1d(np.asarray(t, dtype=float)).ravel())
    return _basis_ders(kv, tt, nders)


def _basis_ders(kv: KnotVector, t: np.ndarray, nders: int):
    # NURBS-book A2.3, vectorized over the evaluation points
    p = kv.degree
    U = kv.values
    m = t.size
    span = find_span(kv, t)
    ndu = np.zeros((m, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - U[span + 1 - j]
        right[:, j] = U[span + j] - t
        saved = np.zeros(m)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved
    nd = min(nders, p)
    ders = np.zeros((m, nders + 1, p + 1))
    ders[:, 0, :] = ndu[:, :, p]
    if nd == 0:
        return span, ders
    for r in range(p + 1):
        a = np.zeros((m, 2, p + 1))
        a[:, 0, 0] = 1.0
        s1, s2 = 0, 1
        for k in range(1, nd + 1):
            d = np.zeros(m)
            rk, pk = r - k, p - k
            if r >= k:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d = a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, k] = -a[:, s1, k - 1] / ndu[:, pk + 1, r]
                d = d + a[:, s2, k] * ndu[:, r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, nd + 1):
        ders[:, k, :] *= fac
        fac *= p - k
    return span, ders


def eval_basis(kv: KnotVector, t: float) -> tuple[int, np.ndarray]:
    """Span index and the ``degree+1`` nonzero basis values at a scalar ``t``."""
    span, N = basis_funs(kv, np.array([t], dtype=float))
    return int(span[0]), N[0]


def design_matrix(kv: KnotVector, t) -> np.ndarray:
    """Dense collocation matrix ``A[s, i] = B_i(t_s)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    span, N = basis_funs(kv, t)
    A = np.zeros((t.size, kv.n))
    cols = span[:, None] - kv.degree + np.arange(kv.degree + 1)[None, :]
    np.put_along_axis(A, cols, N, axis=1)
    return A


# ---------------------------------------------------------------------------
# 1D refinement kernels acting on the leading axis of a control array


def _insert_knot_1d(kv: KnotVector, ctrl: np.ndarray, t: float) -> tuple[KnotVector, np.ndarray]:
    p = kv.degree
    U = kv.values
    k = int(find_span(kv, t))
    s = kv.multiplicity(t)
    if s + 1 > p + 1:
        raise ValueError(f"knot {t} would exceed multiplicity degree+1={p + 1}")
    n = kv.n
    new = np.empty((n + 1,) + ctrl.shape[1:])
    new[: k - p + 1] = ctrl[: k - p + 1]
    new[k - s + 1 :] = ctrl[k - s :]
    for i in range(k - p + 1, k - s + 1):
        a = (t - U[i]) / (U[i + p] - U[i])
        new[i] = a * ctrl[i] + (1.0 - a) * ctrl[i - 1]
    return KnotVector(np.insert(U, k + 1, t), p), new


def _elevate_1d(kv: KnotVector, ctrl: np.ndarray, target: int) -> tuple[KnotVector, np.ndarray]:
    p = kv.degree
    if target == p:
        return kv, ctrl.copy()
    bp, counts = np.unique(kv.values, return_counts=True)
    t = target - p
    new_kv = KnotVector(np.repeat(bp, counts + t), target)
    g = new_kv.greville()
    # the old spline lies in the refined space, so collocation at the Greville
    # abscissae reproduces it exactly (Schoenberg-Whitney holds there)
    old_vals = design_matrix(kv, g) @ ctrl.reshape(kv.n, -1)
    A = design_matrix(new_kv, g)
    new = np.linalg.solve(A, old_vals)
    return new_kv, new.reshape((new_kv.n,) + ctrl.shape[1:])


# ---------------------------------------------------------------------------
# tensor-product evaluation helpers


def _tensor_eval(knots: Sequence[KnotVector], ctrl: np.ndarray, params: np.ndarray, nders: int):
    """Evaluate a tensor-product spline and (optionally) first partials.

    ``ctrl`` has shape ``(n_0, ..., n_{d-1}, dim)``; returns value ``(N, dim)``
    and, when ``nders == 1``, partials ``(N, d, dim)``.
    """
    d = len(knots)
    spans, tabs = [], []
    for a, kv in enumerate(knots):
        span, ders = basis_funs_ders(kv, params[:, a], nders)
        spans.append(span)
        tabs.append(ders)
    npts = params.shape[0]
    dim = ctrl.shape[-1]
    value = np.zeros((npts, dim))
    partials = np.zeros((npts, d, dim)) if nders else None
    ranges = [range(kv.degree + 1) for kv in knots]
    for combo in np.ndindex(*[len(r) for r in ranges]):
        idx = tuple(spans[a] - knots[a].degree + combo[a] for a in range(d))
        P = ctrl[idx]
        w0 = np.ones(npts)
        for a in range(d):
            w0 = w0 * tabs[a][:, 0, combo[a]]
        value += w0[:, None] * P
        if nders:
            for b in range(d):
                w = np.ones(npts)
                for a in range(d):
                    w = w * tabs[a][:, 1 if a == b else 0, combo[a]]
                partials[:, b, :] += w[:, None] * P
    return value, partials


def _as_params(p, d: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(p, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != d:
        raise ValueError(f"expected {d} parameter coordinates, got shape {arr.shape}")
    return arr, single


# ---------------------------------------------------------------------------
# bivariate surfaces


@dataclass(frozen=True, eq=False)
class SurfaceSpline:
    """Tensor-product bivariate B-spline surface ``S(s, t)``.

    ``ctrl`` has shape ``(n_s, n_t, 3 + s)``.
    """

    knots: tuple[KnotVector, KnotVector]
    ctrl: np.ndarray
    channel_names: tuple[str, ...] = ()

    def __post_init__(self):
        ctrl = np.asarray(self.ctrl, dtype=float)
        object.__setattr__(self, "knots", tuple(self.knots))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if ctrl.ndim != 3 or ctrl.shape[:2] != (self.knots[0].n, self.knots[1].n):
            raise ValueError(
                f"control grid {ctrl.shape[:2]} does not match basis counts "
                f"{(self.knots[0].n, self.knots[1].n)}"
            )
        if ctrl.shape[2] != 3 + len(self.channel_names):
            raise ValueError("control point dimension must be 3 + number of channels")
        ctrl = ctrl.copy()
        ctrl.setflags(write=False)
        object.__setattr__(self, "ctrl", ctrl)

    @classmethod
    def from_grid(cls, points, degrees=(1, 1), knots=None, channel_names=()):
        points = np.asarray(points, dtype=float)
        if knots is None:
            knots = tuple(
                KnotVector.uniform(deg, points.shape[a] - deg) for a, deg in enumerate(degrees)
            )
        return cls(tuple(knots), points, channel_names)

    @property
    def degrees(self) -> tuple[int, int]:
        return self.knots[0].degree, self.knots[1].degree

    @property
    def s(self) -> int:
        return len(self.channel_names)

    def evaluate(self, params) -> np.ndarray:
        arr, single = _as_params(params, 2)
        val, _ = _tensor_eval(self.knots, self.ctrl, arr, 0)
        return val[0] if single else val

    def derivatives(self, params) -> tuple[np.ndarray, np.ndarray]:
        """Geometry values ``(N, 3)`` and tangents ``(N, 2, 3)``."""
        arr, _ = _as_params(params, 2)
        val, der = _tensor_eval(self.knots, self.ctrl[..., :3], arr, 1)
        return val, der

    def knot_insert(self, direction: int, t: float, multiplicity: int = 1) -> "SurfaceSpline":
        kv = self.knots[direction]
        ctrl = np.moveaxis(self.ctrl, direction, 0)
        for _ in range(multiplicity):
            kv, ctrl = _insert_knot_1d(kv, ctrl, t)
        knots = list(self.knots)
        knots[direction] = kv
        return SurfaceSpline(tuple(knots), np.moveaxis(ctrl, 0, direction), self.channel_names)

    def degree_elevate(self, direction: int, target: int) -> "SurfaceSpline":
        kv = self.knots[direction]
        if target < kv.degree:
            raise ValueError("target degree below current degree")
        kv2, ctrl = _elevate_1d(kv, np.moveaxis(self.ctrl, direction, 0), target)
        knots = list(self.knots)
        knots[direction] = kv2
        return SurfaceSpline(tuple(knots), np.moveaxis(ctrl, 0, direction), self.channel_names)

    def area(self, order: int = 8) -> float:
        pts, w = self.param_quadrature(order)
        _, der = self.derivatives(pts)
        return float(np.sum(w * np.linalg.norm(np.cross(der[:, 0], der[:, 1]), axis=1)))

    def param_quadrature(self, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
        """Tensor Gauss rule over the knot spans of the parameter domain."""
        g, gw = np.polynomial.legendre.leggauss(order)
        pts1, wts1 = [], []
        for kv in self.knots:
            bp = kv.breakpoints
            a, b = bp[:-1, None], bp[1:, None]
            pts1.append((0.5 * (b - a) * g + 0.5 * (a + b)).ravel())
            wts1.append((0.5 * (b - a) * gw).ravel())
        S, T = np.meshgrid(pts1[0], pts1[1], indexing="ij")
        WS, WT = np.meshgrid(wts1[0], wts1[1], indexing="ij")
        return np.column_stack([S.ravel(), T.ravel()]), (WS * WT).ravel()


# ---------------------------------------------------------------------------
# trivariate volumes


@dataclass(frozen=True, eq=False)
class TrivariateSpline:
    """Trivariate B-spline volume mapping ``(u, v, w)`` to ``R^(3+s)``.

    ``ctrl`` has shape ``(l, m, n, 3 + s)``; ``channel_names`` labels the ``s``
    material channels.
    """

    knots: tuple[KnotVector, KnotVector, KnotVector]
    ctrl: np.ndarray
    channel_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(self.knots))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if len(self.knots) != 3:
            raise ValueError("a trivariate spline needs three knot vectors")
        ctrl = np.asarray(self.ctrl, dtype=float)
        dims = tuple(kv.n for kv in self.knots)
        if ctrl.ndim != 4 or ctrl.shape[:3] != dims:
            raise ValueError(f"control grid {ctrl.shape[:3]} does not match basis counts {dims}")
        if ctrl.shape[3] != 3 + len(self.channel_names):
            raise ValueError("control point dimension must be 3 + number of channels")
        ctrl = ctrl.copy()
        ctrl.setflags(write=False)
        object.__setattr__(self, "ctrl", ctrl)

    # -- construction -------------------------------------------------------

    @classmethod
    def box(cls, lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> "TrivariateSpline":
        """Trilinear box on the unit parameter cube."""
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        g = np.stack(np.meshgrid(*[[lo[a], hi[a]] for a in range(3)], indexing="ij"), axis=-1)
        kv = KnotVector([0, 0, 1, 1], 1)
        return cls((kv, kv, kv), g)

    def with_channels(self, names: Sequence[str], values: np.ndarray) -> "TrivariateSpline":
        """Replace material channels; ``values`` has shape ``(l, m, n, len(names))``."""
        values = np.asarray(values, dtype=float).reshape(self.dims + (len(names),))
        return TrivariateSpline(
            self.knots, np.concatenate([self.ctrl[..., :3], values], axis=-1), tuple(names)
        )

    # -- basic properties ---------------------------------------------------

    @property
    def degrees(self) -> tuple[int, int, int]:
        return tuple(kv.degree for kv in self.knots)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(kv.n for kv in self.knots)

    @property
    def s(self) -> int:
        return len(self.channel_names)

    @property
    def param_lo(self) -> np.ndarray:
        return np.array([kv.domain[0] for kv in self.knots])

    @property
    def param_hi(self) -> np.ndarray:
        return np.array([kv.domain[1] for kv in self.knots])

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box around the control net (contains the volume)."""
        P = self.ctrl[..., :3].reshape(-1, 3)
        return P.min(axis=0), P.max(axis=0)

    @cached_property
    def tol_geom(self) -> float:
        lo, hi = self.bbox
        return 1e-10 * float(np.linalg.norm(hi - lo))

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, params) -> np.ndarray:
        """Geometry and material channels at parameter points, ``(N, 3+s)``."""
        arr, single = _as_params(params, 3)
        val, _ = _tensor_eval(self.knots, self.ctrl, arr, 0)
        return val[0] if single else val

    def geometry_and_jacobian(self, params) -> tuple[np.ndarray, np.ndarray]:
        """Positions ``(N, 3)`` and Jacobians ``(N, 3, 3)`` with ``J[:, i, j] = dx_i/du_j``."""
        arr, _ = _as_params(params, 3)
        val, der = _tensor_eval(self.knots, self.ctrl[..., :3], arr, 1)
        return val, np.swapaxes(der, 1, 2)

    def jacobian(self, params) -> np.ndarray:
        arr, single = _as_params(params, 3)
        J = self.geometry_and_jacobian(arr)[1]
        return J[0] if single else J

    def lattice(self, per_span: int = 2) -> tuple[np.ndarray, np.ndarray]:
        """Parameter lattice (``per_span`` intervals per knot span) and its images."""
        axes = []
        for kv in self.knots:
            bp = kv.breakpoints
            t = np.concatenate(
                [np.linspace(a, b, per_span + 1)[:-1] for a, b in zip(bp[:-1], bp[1:])] + [bp[-1:]]
            )
            axes.append(t)
        U = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        return U, self.evaluate(U)[:, :3]

    @cached_property
    def _seed_index(self):
        U, X = self.lattice(3)
        return U, cKDTree(X)

    def seed_params(self, x: np.ndarray) -> np.ndarray:
        """Cold-start guesses: nearest lattice sample in physical space."""
        U, tree = self._seed_index
        _, idx = tree.query(np.atleast_2d(x))
        return U[idx]

    def min_jacobian_det(self, per_span: int = 3) -> tuple[float, float]:
        """Min and max Jacobian determinant over a sampled lattice (incl. boundary)."""
        U, _ = self.lattice(per_span)
        det = np.linalg.det(self.jacobian(U))
        return float(det.min()), float(det.max())

    def is_regular(self, per_span: int = 3) -> bool:
        lo, hi = self.min_jacobian_det(per_span)
        scale = max(abs(lo), abs(hi))
        return scale > 0 and (lo > 1e-9 * scale or hi < -1e-9 * scale)

    # -- inversion -----------------------------------------------------------

    def invert_points(
        self,
        x,
        guess=None,
        tol: float | None = None,
        max_iter: int = 30,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Damped Newton inversion of the geometric map for many points.

        Returns ``(params, found, iterations)``.  Iterates are clamped to the
        knot box; a point whose clamped iteration cannot reach the residual
        tolerance is reported as not found.
        """
        return _invert(self, np.atleast_2d(np.asarray(x, dtype=float)), guess, tol, max_iter)

    def invert_point(self, x, guess=None, tol: float | None = None, max_iter: int = 30):
        """Parameter point whose image is ``x``, or ``None`` when none exists."""
        g = None if guess is None else np.atleast_2d(np.asarray(guess, dtype=float))
        u, ok, _ = self.invert_points(np.atleast_2d(x), g, tol, max_iter)
        return u[0] if ok[0] else None

    # -- refinement ----------------------------------------------------------

    def knot_insert(self, direction: int, t: float, multiplicity: int = 1) -> "TrivariateSpline":
        kv = self.knots[direction]
        lo, hi = kv.domain
        if not lo < t < hi:
            raise ValueError("inserted knot must lie strictly inside the parameter range")
        if multiplicity < 1 or kv.multiplicity(t) + multiplicity > kv.degree + 1:
            raise ValueError(
                f"multiplicity {kv.multiplicity(t) + multiplicity} at t={t} exceeds degree+1"
            )
        ctrl = np.moveaxis(self.ctrl, direction, 0)
        for _ in range(multiplicity):
            kv, ctrl = _insert_knot_1d(kv, ctrl, t)
        knots = list(self.knots)
        knots[direction] = kv
        return TrivariateSpline(tuple(knots), np.moveaxis(ctrl, 0, direction), self.channel_names)

    def degree_elevate(self, direction: int, target: int) -> "TrivariateSpline":
        kv = self.knots[direction]
        if target < kv.degree:
            raise ValueError(f"target degree {target} below current degree {kv.degree}")
        kv2, ctrl = _elevate_1d(kv, np.moveaxis(self.ctrl, direction, 0), target)
        knots = list(self.knots)
        knots[direction] = kv2
        return TrivariateSpline(tuple(knots), np.moveaxis(ctrl, 0, direction), self.channel_names)

    # -- faces ---------------------------------------------------------------

    def boundary_faces(self) -> dict[str, SurfaceSpline]:
        """The six bounding surfaces keyed ``u0, u1, v0, v1, w0, w1``.

        Face parameters run cyclically (``u`` faces use ``(v, w)``, ``v`` faces
        ``(w, u)``, ``w`` faces ``(u, v)``), so for a positively oriented volume
        the tangent cross product points outward on the ``*1`` faces and inward
        on the ``*0`` faces.
        """
        faces = {}
        for d, name in enumerate("uvw"):
            a, b = (d + 1) % 3, (d + 2) % 3
            for end, tag in ((0, "0"), (-1, "1")):
                sl = np.take(self.ctrl, end if end == 0 else self.dims[d] - 1, axis=d)
                # remaining axes are in increasing order; reorder to (a, b)
                rem = [ax for ax in range(3) if ax != d]
                order = [rem.index(a), rem.index(b), 2]
                faces[name + tag] = SurfaceSpline(
                    (self.knots[a], self.knots[b]), np.transpose(sl, order), self.channel_names
                )
        return faces

    def volume(self, order: int | None = None) -> float:
        """Physical volume by Gauss quadrature over knot spans."""
        order = order or max(self.degrees) * 3 + 1
        g, gw = np.polynomial.legendre.leggauss(order)
        pts1, wts1 = [], []
        for kv in self.knots:
            bp = kv.breakpoints
            a, b = bp[:-1, None], bp[1:, None]
            pts1.append((0.5 * (b - a) * g + 0.5 * (a + b)).ravel())
            wts1.append((0.5 * (b - a) * gw).ravel())
        U = np.stack(np.meshgrid(*pts1, indexing="ij"), axis=-1).reshape(-1, 3)
        W = np.einsum("i,j,k->ijk", *wts1).ravel()
        return float(np.sum(W * np.abs(np.linalg.det(self.jacobian(U)))))

    # -- exchange format -----------------------------------------------------

    def to_dict(self) -> dict:
        flat = np.transpose(self.ctrl, (2, 1, 0, 3)).reshape(-1)
        return {
            "degrees": list(self.degrees),
            "knots": {k: kv.values.tolist() for k, kv in zip("uvw", self.knots)},
            "dims": list(self.dims),
            "channels": list(self.channel_names),
            "ctrl": flat.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrivariateSpline":
        degs = d["degrees"]
        knots = tuple(KnotVector(d["knots"][k], degs[a]) for a, k in enumerate("uvw"))
        l, m, n = d["dims"]
        channels = tuple(d.get("channels", ()))
        dim = 3 + len(channels)
        flat = np.asarray(d["ctrl"], dtype=float)
        if flat.size != l * m * n * dim:
            raise ValueError("ctrl length does not match dims and channel count")
        ctrl = np.transpose(flat.reshape(n, m, l, dim), (2, 1, 0, 3))
        return cls(knots, ctrl, channels)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TrivariateSpline":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Newton inversion


def _invert(sp: TrivariateSpline, x: np.ndarray, guess, tol, max_iter):
    npts = x.shape[0]
    tol = sp.tol_geom if tol is None else tol
    lo, hi = sp.param_lo, sp.param_hi
    width = hi - lo
    if guess is None:
        u = sp.seed_params(x)
    else:
        u = np.clip(np.broadcast_to(np.asarray(guess, dtype=float), (npts, 3)).copy(), lo, hi)
    found = np.zeros(npts, dtype=bool)
    failed = np.zeros(npts, dtype=bool)
    iters = np.zeros(npts, dtype=int)
    grow = np.zeros(npts, dtype=int)
    perturb = np.zeros(npts, dtype=int)
    if npts == 0:
        return u, found, iters

    X, J = sp.geometry_and_jacobian(u)
    F = X - x
    res = np.linalg.norm(F, axis=1)
    found = res <= tol
    active = ~found

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters[idx] += 1
        Ja, Fa, ua, ra = J[idx], F[idx], u[idx], res[idx]
        det = np.linalg.det(Ja)
        scale = np.prod(np.linalg.norm(Ja, axis=1), axis=1)
        sing = np.abs(det) <= 1e-14 * np.maximum(scale, 1e-300)
        step = np.zeros_like(ua)
        ok = ~sing
        if np.any(ok):
            step[ok] = -np.linalg.solve(Ja[ok], Fa[ok][..., None])[..., 0]
        if np.any(sing):
            # degenerate Jacobian: nudge the iterate and try again
            si = idx[sing]
            perturb[si] += 1
            nudge = 1e-6 * width * np.where(ua[sing] - lo < 0.5 * width, 1.0, -1.0)
            u[si] = np.clip(ua[sing] + nudge, lo, hi)
            failed[si[perturb[si] > 3]] = True
        # damped line search on the clamped step
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        accepted[sing] = True
        best_u = ua.copy()
        best_r = ra.copy()
        best_X = X[idx].copy()
        best_J = Ja.copy()
        todo = np.flatnonzero(~accepted)
        for _h in range(11):
            if todo.size == 0:
                break
            cand = np.clip(ua[todo] + t[todo, None] * step[todo], lo, hi)
            Xc, Jc = sp.geometry_and_jacobian(cand)
            rc = np.linalg.norm(Xc - x[idx[todo]], axis=1)
            better = rc < ra[todo]
            sel = todo[better]
            best_u[sel], best_r[sel], best_X[sel], best_J[sel] = (
                cand[better],
                rc[better],
                Xc[better],
                Jc[better],
            )
            accepted[sel] = True
            todo = todo[~better]
            t[todo] *= 0.5
        # points with no decreasing step: stalled (clamped outward or converged to a
        # boundary point with nonzero residual)
        stalled = idx[~accepted]
        failed[stalled] = True
        moved = idx[accepted & ~sing]
        sub = accepted & ~sing
        u[moved] = best_u[sub]
        X[moved] = best_X[sub]
        J[moved] = best_J[sub]
        F[moved] = X[moved] - x[moved]
        newres = best_r[sub]
        grow[moved] = np.where(newres > res[moved], grow[moved] + 1, 0)
        res[moved] = newres
        failed[moved[grow[moved] >= 3]] = True
        if np.any(sing):
            si = idx[sing]
            X[si], J[si] = sp.geometry_and_jacobian(u[si])
            F[si] = X[si] - x[si]
            res[si] = np.linalg.norm(F[si], axis=1)
        found |= res <= tol
        active = ~found & ~failed
    return u, found, iters


# ---------------------------------------------------------------------------
# functional aliases


def eval_volume(sp: TrivariateSpline, p) -> np.ndarray:
    return sp.evaluate(p)


def jacobian(sp: TrivariateSpline, p) -> np.ndarray:
    return sp.jacobian(p)


def invert_point(sp: TrivariateSpline, x, guess=None, tol=None, max_iter: int = 30):
    return sp.invert_point(x, guess, tol, max_iter)


def knot_insert(sp: TrivariateSpline, direction: int, t: float, multiplicity: int = 1):
    return sp.knot_insert(direction, t, multiplicity)


def degree_elevate(sp: TrivariateSpline, direction: int, target: int):
    return sp.degree_elevate(direction, target)


def boundary_faces(sp: TrivariateSpline) -> dict[str, SurfaceSpline]:
    return sp.boundary_faces()
