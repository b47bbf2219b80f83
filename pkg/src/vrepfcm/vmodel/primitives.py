"""Primitive V-cell constructors: extrusion, ruled volumes, revolution, cylinder, sphere."""

from __future__ import annotations

import numpy as np

from ..spline_core import KnotVector, SurfaceSpline, TrivariateSpline, design_matrix
from .model import Leaf, VCell, VModel

_LINEAR = KnotVector([0.0, 0.0, 1.0, 1.0], 1)


def _geometry(srf: SurfaceSpline) -> np.ndarray:
    return np.asarray(srf.ctrl[..., :3], dtype=float)


def make_extrusion(surface: SurfaceSpline, vector, cid: int = 0) -> VCell:
    """Extrude ``surface`` along ``vector``; the new direction is linear with knots [0,0,1,1]."""
    v = np.asarray(vector, dtype=float)
    if v.shape != (3,) or not np.linalg.norm(v) > 0:
        raise ValueError("extrusion vector must be a nonzero 3-vector")
    P = _geometry(surface)
    ctrl = np.stack([P, P + v], axis=2)
    return VCell(TrivariateSpline((surface.knots[0], surface.knots[1], _LINEAR), ctrl), cid)


def _check_domains(a: KnotVector, b: KnotVector):
    if not np.allclose(a.domain, b.domain):
        raise ValueError("surfaces of a ruled volume must share parameter domains")


def _refine_to(srf: SurfaceSpline, direction: int, kv: KnotVector) -> SurfaceSpline:
    cur = srf.knots[direction]
    if cur.degree < kv.degree:
        srf = srf.degree_elevate(direction, kv.degree)
        cur = srf.knots[direction]
    # insert the missing knots of kv
    for t in np.unique(kv.values[kv.degree + 1 : -kv.degree - 1]):
        need = kv.multiplicity(t) - cur.multiplicity(t)
        if need > 0:
            srf = srf.knot_insert(direction, float(t), need)
            cur = srf.knots[direction]
    return srf


def _merged(a: KnotVector, b: KnotVector, degree: int) -> KnotVector:
    """Smallest clamped vector of ``degree`` containing both (elevated) interior knot sets."""
    lo, hi = a.domain
    ts = set()
    mult = {}
    for kv in (a, b):
        inc = degree - kv.degree
        for t in np.unique(kv.values[kv.degree + 1 : -kv.degree - 1]):
            m = kv.multiplicity(t) + inc
            mult[float(t)] = max(mult.get(float(t), 0), m)
            ts.add(float(t))
    inner = [t for t in sorted(ts) for _ in range(mult[t])]
    return KnotVector(np.r_[[lo] * (degree + 1), inner, [hi] * (degree + 1)], degree)


def make_ruled(s0: SurfaceSpline, s1: SurfaceSpline, cid: int = 0) -> VCell:
    """Linear blend between two surfaces (refined to a common basis first)."""
    for d in range(2):
        _check_domains(s0.knots[d], s1.knots[d])
        deg = max(s0.knots[d].degree, s1.knots[d].degree)
        target = _merged(s0.knots[d], s1.knots[d], deg)
        s0 = _refine_to(s0, d, target)
        s1 = _refine_to(s1, d, target)
    ctrl = np.stack([_geometry(s0), _geometry(s1)], axis=2)
    sp = TrivariateSpline((s0.knots[0], s0.knots[1], _LINEAR), ctrl)
    if np.allclose(ctrl[:, :, 0], ctrl[:, :, 1]):
        raise ValueError("ruled volume between identical surfaces is degenerate")
    try:
        return VCell(sp, cid)
    except ValueError as exc:
        raise ValueError(f"incompatible parameter orientations of the ruled surfaces ({exc})") from exc


def _arc_coefficients(angle: float, spans: int, start: float = 0.0):
    """Quadratic spline coefficients ``(a_k, b_k)`` interpolating ``(cos, sin)`` of the arc."""
    kv = KnotVector.uniform(2, spans)
    g = kv.greville()
    th = start + angle * g
    A = design_matrix(kv, g)
    coef = np.linalg.solve(A, np.c_[np.cos(th), np.sin(th)])
    return kv, coef[:, 0], coef[:, 1]


def _axis_frame(axis_point, axis_dir):
    e = np.asarray(axis_dir, dtype=float)
    e = e / np.linalg.norm(e)
    return np.asarray(axis_point, dtype=float), e


def make_revolution(profile: SurfaceSpline, axis=((0, 0, 0), (0, 0, 1)), angle: float = 360.0,
                    spans_per_sector: int = 4, first_id: int = 0) -> list[VCell]:
    """Revolve a profile surface about ``axis = (point, direction)`` by ``angle`` degrees.

    Each sector of at most 90 degrees becomes one V-cell whose angular
    direction is a quadratic spline interpolating the circle.
    """
    if not angle > 0:
        raise ValueError("revolution angle must be positive")
    o, e = _axis_frame(*axis)
    P = _geometry(profile)
    rel = P - o
    ax = rel @ e
    perp = rel - ax[..., None] * e
    r = np.linalg.norm(perp, axis=-1)
    # the profile must stay on one side of the axis: all perp vectors share a half-plane
    ref = perp.reshape(-1, 3)[np.argmax(r.reshape(-1))]
    if np.any((perp.reshape(-1, 3) @ ref) < -1e-12 * r.max() ** 2):
        raise ValueError("profile crosses the revolution axis")
    cross = np.cross(e, perp)
    nsec = int(np.ceil(angle / 90.0 - 1e-12))
    step = np.radians(angle) / nsec
    cells = []
    for k in range(nsec):
        kv, a, b = _arc_coefficients(step, spans_per_sector, k * step)
        ctrl = (o + ax[..., None] * e)[:, :, None, :] + a[None, None, :, None] * perp[:, :, None, :] \
            + b[None, None, :, None] * cross[:, :, None, :]
        sp = TrivariateSpline((profile.knots[0], profile.knots[1], kv), ctrl)
        cells.append(VCell(sp, first_id + k))
    return cells


def _box_surface(corners: np.ndarray, degree: int, spans: int) -> SurfaceSpline:
    """Bilinear patch on 2x2 corner points elevated and refined to ``degree`` / ``spans``."""
    kv = KnotVector([0.0, 0.0, 1.0, 1.0], 1)
    s = SurfaceSpline((kv, kv), corners)
    for d in range(2):
        if degree > 1:
            s = s.degree_elevate(d, degree)
        for t in np.linspace(0, 1, spans + 1)[1:-1]:
            s = s.knot_insert(d, float(t))
    return s


def _interp_surface(fn, degree: int, spans: int) -> SurfaceSpline:
    """Tensor interpolation at Greville points of ``fn(s, t) -> (n, 3)``."""
    kv = KnotVector.uniform(degree, spans)
    g = kv.greville()
    S, T = np.meshgrid(g, g, indexing="ij")
    X = fn(S.ravel(), T.ravel()).reshape(len(g), len(g), 3)
    Ai = np.linalg.inv(design_matrix(kv, g))
    C = np.einsum("ia,jb,abk->ijk", Ai, Ai, X)
    return SurfaceSpline((kv, kv), C)


def make_cylinder(radius: float, height: float, spans: int = 4, core: float = 0.5,
                  center=(0.0, 0.0, 0.0)) -> VModel:
    """Cylinder of five extruded cells: a square core and four ring quadrants.

    Arcs are quadratic splines (``spans`` per quadrant) interpolating the
    circle; the core uses the same knot structure so shared faces match.
    """
    if not (radius > 0 and height > 0):
        raise ValueError("radius and height must be positive")
    c0 = np.asarray(center, dtype=float)
    a = core * radius  # half side of the core square
    kv = KnotVector.uniform(2, spans)
    g = kv.greville()
    Ai = np.linalg.inv(design_matrix(kv, g))
    sq = np.array([[-a, -a, 0], [a, -a, 0], [-a, a, 0], [a, a, 0]], dtype=float).reshape(2, 2, 3) + c0
    core_srf = _box_surface(sq, 2, spans)
    cells = [make_extrusion(core_srf, (0, 0, height), 0)]
    # quadrant k spans angles [-45 + 90k, 45 + 90k]; inner edge is the square side
    for k in range(4):
        th0 = np.radians(-45.0 + 90.0 * k)
        th = th0 + np.radians(90.0) * g
        rot = np.array([[np.cos(np.radians(90 * k)), -np.sin(np.radians(90 * k))],
                        [np.sin(np.radians(90 * k)), np.cos(np.radians(90 * k))]])
        inner = (np.c_[np.full_like(g, a), -a + 2 * a * g]) @ rot.T
        outer = radius * np.c_[np.cos(th), np.sin(th)]
        ci = Ai @ inner
        co = Ai @ outer
        # parameters: u angular (quadratic), v radial (linear), w height
        P = np.zeros((len(g), 2, 3))
        P[:, 0, :2], P[:, 1, :2] = ci, co
        P += c0
        srf = SurfaceSpline((kv, _LINEAR), P)
        cells.append(make_extrusion(srf, (0, 0, height), k + 1))
    return VModel(tuple(cells))


def make_box(lo, hi, cid: int = 0) -> VCell:
    return VCell(TrivariateSpline.box(lo, hi), cid)


def make_sphere(radius: float, spans: int = 4, core: float = 0.5, center=(0.0, 0.0, 0.0)) -> VModel:
    """Sphere of one cuboid core and six ruled cells between core faces and spherical caps."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    c0 = np.asarray(center, dtype=float)
    a = core * radius / np.sqrt(3.0)  # core corners sit at radius core * R
    cells = []
    # core as a quadratic-refined box so that faces match the caps' knot structure
    kv = KnotVector.uniform(2, spans)
    corners = np.stack(np.meshgrid([-a, a], [-a, a], [-a, a], indexing="ij"), axis=-1) + c0
    core_sp = TrivariateSpline((_LINEAR, _LINEAR, _LINEAR), corners)
    for d in range(3):
        core_sp = core_sp.degree_elevate(d, 2)
        for t in np.linspace(0, 1, spans + 1)[1:-1]:
            core_sp = core_sp.knot_insert(d, float(t))
    cells.append(VCell(core_sp, 0))
    cid = 1
    for axis in range(3):
        for sign in (-1.0, 1.0):
            b, c = (axis + 1) % 3, (axis + 2) % 3
            if sign < 0:
                b, c = c, b  # keep right-handed orientation

            def face(s, t, axis=axis, sign=sign, b=b, c=c):
                X = np.zeros((len(s), 3))
                X[:, axis] = sign * a
                X[:, b] = -a + 2 * a * s
                X[:, c] = -a + 2 * a * t
                return X

            def cap(s, t, face=face):
                X = face(s, t)
                return radius * X / np.linalg.norm(X, axis=1, keepdims=True)

            s0 = _interp_surface(lambda s, t: face(s, t) + c0, 2, spans)
            s1 = _interp_surface(lambda s, t: cap(s, t) + c0, 2, spans)
            cells.append(make_ruled(s0, s1, cid))
            cid += 1
    return VModel(tuple(cells))


def union_model(*models: VModel) -> VModel:
    """Concatenate models as one union (ids renumbered consecutively)."""
    out = models[0]
    for m in models[1:]:
        out = out.union(m)
    return out


__all__ = [
    "make_extrusion",
    "make_ruled",
    "make_revolution",
    "make_cylinder",
    "make_sphere",
    "make_box",
    "union_model",
    "Leaf",
]
