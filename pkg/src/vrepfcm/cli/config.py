"""Analysis configuration: JSON schema, unit-checked quantities and builders.

Internal units are cm, kN/cm^2, W/(cm K), 1/K, kN cm and degrees.
Function-valued inputs are written as restricted arithmetic expressions in
the physical coordinates ``x, y, z`` (cm).
"""

from __future__ import annotations

import ast
import json
import os
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from ..units import UnitError, parse_quantity


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 2)."""


class InputError(OSError):
    """Unreadable or unwritable file (exit code 4)."""


TARGET = {
    "length": "cm",
    "stress": "kN/cm^2",
    "conductivity": "W/(cm*K)",
    "expansion": "1/K",
    "temperature": "K",
    "angle": "deg",
    "heat_flux": "W/cm^2",
    "energy": "kN*cm",
    "dimensionless": "",
}

# ---------------------------------------------------------------------------
# schema

_QTY = {
    "anyOf": [
        {"type": "string"},
        {"type": "number"},
        {"type": "array", "prefixItems": [{"type": ["number", "array"]}, {"type": "string"}], "minItems": 2, "maxItems": 2},
        {"type": "object", "required": ["value"], "properties": {"value": {}, "unit": {"type": "string"}}},
    ]
}
_VEC = {"anyOf": [{"type": "array", "minItems": 3, "maxItems": 3}, _QTY]}
_FIELD = {
    "anyOf": [
        _QTY,
        {"type": "object", "required": ["expr"], "properties": {"expr": {"type": "string"}, "unit": {"type": "string"}}},
    ]
}
_INT3 = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 3, "maxItems": 3}

_GEOMETRY = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["box", "cylinder", "sphere", "file", "union", "intersection", "difference"]},
        "lo": _VEC, "hi": _VEC, "center": _VEC,
        "radius": _QTY, "height": _QTY,
        "spans": {"type": "integer", "minimum": 1},
        "core": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "degrees": _INT3,
        "knots": {"type": "object"},
        "path": {"type": "string"},
        "args": {"type": "array", "minItems": 2},
    },
}
_MATERIAL = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["isotropic", "graded", "channels", "gibson_ashby", "table"]},
        "E": _FIELD, "nu": _FIELD, "kappa": _FIELD, "alpha_th": _FIELD,
        "phi": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "solid": {"type": "object"},
        "bindings": {"type": "object", "additionalProperties": {"type": "string"}},
        "constants": {"type": "object"},
        "file": {"type": "string"},
        "diameter": _FIELD, "angle": _FIELD,
    },
}
_SUPPORT = {
    "anyOf": [
        {"type": "string"},
        {"type": "object", "required": ["face"], "properties": {"face": {"type": "string"}, "cell": {"type": "integer"}}},
        {"type": "array", "items": {"type": ["string", "object"]}},
    ]
}
_BC = {
    "type": "object",
    "required": ["type", "support"],
    "properties": {
        "type": {"enum": ["displacement", "traction", "temperature", "heat_flux"]},
        "support": _SUPPORT,
        "components": {"type": "array", "items": {"enum": [0, 1, 2]}, "minItems": 1},
        "value": {},
    },
}
_MESH = {
    "type": "object",
    "properties": {
        "margin": _QTY,
        "divisions": _INT3,
        "p": {"anyOf": [{"type": "integer", "minimum": 1}, {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}]},
        "depth": {"type": "integer", "minimum": 0},
        "q": {"type": "number", "exclusiveMinimum": 0},
        "conforming": {"type": "boolean"},
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "geometry": _GEOMETRY,
        "membership": {
            "type": "object",
            "properties": {
                "engine": {"enum": ["inverse", "ray"]},
                "resolution": {"type": "integer", "minimum": 2},
                "cache": {"type": "boolean"},
            },
        },
        "points": {
            "type": "object",
            "properties": {
                "file": {"type": "string"},
                "unit": {"type": "string"},
                "sample": {"type": "integer", "minimum": 0},
            },
        },
        "mesh": _MESH,
        "material": _MATERIAL,
        "bcs": {"type": "array", "items": _BC},
        "analysis": {
            "type": "object",
            "properties": {
                "type": {"enum": ["elastic", "heat", "thermo_elastic"]},
                "theta_ref": _QTY,
            },
        },
        "outputs": {
            "type": "object",
            "properties": {
                "vtk": {"anyOf": [{"type": "boolean"}, {"type": "object", "properties": {"shape": _INT3}}]},
                "profile": {
                    "type": "object",
                    "required": ["from", "to"],
                    "properties": {"from": _VEC, "to": _VEC, "n": {"type": "integer", "minimum": 2}, "field": {"type": "string"}},
                },
            },
        },
        "fit": {
            "type": "object",
            "required": ["target"],
            "properties": {
                "cell": {"type": "integer"},
                "channel": {"type": "string"},
                "target": _FIELD,
                "n_samples": {"anyOf": [{"type": "integer", "minimum": 2}, _INT3]},
                "mode": {"enum": ["clamped", "free"]},
            },
        },
        "convergence": {
            "type": "object",
            "properties": {
                "p": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "reference": {"type": "object"},
            },
        },
        "sweep": {
            "type": "object",
            "required": ["parameter", "values"],
            "properties": {
                "parameter": {"enum": ["beta", "q", "depth"]},
                "values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
        },
        "homogenize": {"type": "object", "required": ["rve", "material"]},
        "table": {"type": "object"},
        "tensor": {"type": "object"},
        "tessellation": {"type": "object", "properties": {"resolution": {"type": "integer", "minimum": 2}}},
    },
}


def validate(cfg: dict):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {loc}: {exc.message}") from None


def load_config(path) -> tuple[dict, str]:
    """Parse and schema-validate a config file; returns the document and its directory."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    validate(cfg)
    return cfg, os.path.dirname(os.path.abspath(path))


# ---------------------------------------------------------------------------
# quantities and expressions


def qty(q, dimension: str, target: str | None = None) -> float:
    try:
        return float(parse_quantity(q, dimension, target or TARGET[dimension]))
    except (UnitError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad {dimension} quantity {q!r}: {exc}") from None


def vec(q, dimension: str, n: int = 3) -> np.ndarray:
    """A vector quantity: ``{"value": [..], "unit": u}``, ``[[..], u]`` or a list of scalar quantities."""
    if isinstance(q, dict) and isinstance(q.get("value"), list):
        vals, unit = q["value"], q.get("unit", "")
    elif isinstance(q, list) and len(q) == 2 and isinstance(q[0], list) and isinstance(q[1], str):
        vals, unit = q
    elif isinstance(q, list) and len(q) == n:
        return np.array([qty(v, dimension) for v in q])
    else:
        raise ConfigError(f"bad {dimension} vector {q!r}")
    if len(vals) != n:
        raise ConfigError(f"{dimension} vector {q!r} needs {n} entries")
    return np.array([qty([float(v), unit], dimension) for v in vals])


_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log, "sqrt": np.sqrt,
    "abs": np.abs, "tanh": np.tanh, "arctan2": np.arctan2, "where": np.where,
    "minimum": np.minimum, "maximum": np.maximum, "clip": np.clip, "heaviside": np.heaviside,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Compare, ast.BoolOp, ast.Call, ast.Name, ast.Load,
    ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod,
    ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq, ast.And, ast.Or, ast.BitAnd, ast.BitOr,
)


def compile_expr(text: str):
    """``f(X) -> (N,)`` from an arithmetic expression in ``x, y, z`` (no attribute access)."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ConfigError(f"expression {text!r}: {type(node).__name__} not allowed")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS and node.id not in "xyz":
            raise ConfigError(f"expression {text!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ConfigError(f"expression {text!r}: only elementary functions may be called")
    code = compile(tree, "<expr>", "eval")

    def f(X):
        X = np.atleast_2d(X)
        env = dict(_FUNCS, **_CONSTS, x=X[:, 0], y=X[:, 1], z=X[:, 2])
        return np.broadcast_to(np.asarray(eval(code, {"__builtins__": {}}, env), dtype=float), (len(X),)).copy()

    f.text = text
    return f


def field_value(spec, dimension: str, target: str | None = None):
    """Constant quantity or ``{"expr": ..., "unit": ...}`` converted to internal units."""
    if isinstance(spec, dict) and "expr" in spec:
        unit = spec.get("unit", "")
        scale = qty([1.0, unit], dimension, target)
        f = compile_expr(spec["expr"])
        return lambda X: scale * f(X)
    return qty(spec, dimension, target)


def resolve_path(path: str, base: str) -> str:
    p = path if os.path.isabs(path) else os.path.join(base, path)
    if not os.path.exists(p):
        raise InputError(f"referenced file not found: {path}")
    return p


@dataclass
class Context:
    cfg: dict
    base: str
    seed: int = 0
    engine: str | None = None
    threads: int | None = None
    extra: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        if name not in self.cfg:
            raise ConfigError(f"config section {name!r} is required for this command")
        return self.cfg[name]


# ---------------------------------------------------------------------------
# geometry


def build_geometry(g: dict, base: str):
    from ..spline_core import KnotVector, TrivariateSpline
    from ..vmodel import VCell, VModel, make_cylinder, make_sphere

    t = g["type"]
    if t == "box":
        if "lo" not in g or "hi" not in g:
            raise ConfigError("box geometry needs lo and hi")
        lo, hi = vec(g["lo"], "length"), vec(g["hi"], "length")
        if np.any(hi <= lo):
            raise ConfigError("box needs hi > lo in every direction")
        sp = TrivariateSpline.box(lo, hi)
        for d, deg in enumerate(g.get("degrees", (1, 1, 1))):
            if deg > 1:
                sp = sp.degree_elevate(d, deg)
        for key, ts in g.get("knots", {}).items():
            if key not in "uvw" or len(key) != 1:
                raise ConfigError(f"knot direction {key!r} must be u, v or w")
            for tk in ts:
                if not 0.0 < float(tk) < 1.0:
                    raise ConfigError(f"interior knot {tk} outside (0, 1)")
                sp = sp.knot_insert("uvw".index(key), float(tk))
        return VModel((VCell(sp, 0),))
    if t == "cylinder":
        c = vec(g["center"], "length") if "center" in g else np.zeros(3)
        return make_cylinder(qty(g["radius"], "length"), qty(g["height"], "length"),
                             g.get("spans", 4), g.get("core", 0.5), c)
    if t == "sphere":
        c = vec(g["center"], "length") if "center" in g else np.zeros(3)
        return make_sphere(qty(g["radius"], "length"), g.get("spans", 4), g.get("core", 0.5), c)
    if t == "file":
        path = resolve_path(g["path"], base)
        try:
            return VModel.from_json(path)
        except (KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"model file {g['path']} malformed: {exc}") from None
    if t in ("union", "intersection", "difference"):
        models = [build_geometry(a, base) for a in g["args"]]
        out = models[0]
        for m in models[1:]:
            out = out.boolean(t, m)
        return out
    raise ConfigError(f"unknown geometry type {t!r}")


def check_files(cfg: dict, base: str):
    """All file references must resolve before any computation starts."""
    def walk(node):
        if isinstance(node, dict):
            for k, v in node.items():
                if k in ("path", "file", "tensor_file") and isinstance(v, str):
                    resolve_path(v, base)
                else:
                    walk(v)
        elif isinstance(node, list):
            for v in node:
                walk(v)

    walk({k: v for k, v in cfg.items() if k not in ("outputs",)})


def face_support(vm, s):
    """Boundary surfaces named ``"w1"`` / ``"3:w1"`` / ``{"cell": 3, "face": "w1"}`` (lists allowed)."""
    if isinstance(s, list):
        return [face_support(vm, v) for v in s]
    if isinstance(s, str):
        cid, _, face = s.rpartition(":")
        s = {"cell": int(cid) if cid else vm.ids[0], "face": face}
    cid = s.get("cell", vm.ids[0])
    try:
        cell = vm.cell(cid)
    except KeyError:
        raise ConfigError(f"support references unknown V-cell {cid}") from None
    faces = cell.spline.boundary_faces()
    if s["face"] not in faces:
        raise ConfigError(f"unknown face {s['face']!r} (use u0, u1, v0, v1, w0, w1)")
    return faces[s["face"]]


# ---------------------------------------------------------------------------
# materials


def build_isotropic(m: dict):
    from ..material import IsotropicMaterial

    for k in ("E", "nu"):
        if k not in m:
            raise ConfigError(f"isotropic material needs {k}")
    try:
        return IsotropicMaterial(
            qty(m["E"], "stress"),
            qty(m["nu"], "dimensionless"),
            qty(m["kappa"], "conductivity") if "kappa" in m else 0.0,
            qty(m["alpha_th"], "expansion") if "alpha_th" in m else 0.0,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"material: {exc}") from None


def build_material(m: dict, vm, base: str):
    from ..fcm import CellChannels, Graded, TableMaterial
    from ..material import EffectiveTensorTable, MaterialField, porous

    t = m["type"]
    if t == "isotropic":
        return build_isotropic(m)
    if t == "graded":
        if "E" not in m or "nu" not in m:
            raise ConfigError("graded material needs E and nu")
        return Graded(
            field_value(m["E"], "stress"),
            field_value(m["nu"], "dimensionless"),
            field_value(m["kappa"], "conductivity") if "kappa" in m else 0.0,
            field_value(m["alpha_th"], "expansion") if "alpha_th" in m else 0.0,
        )
    if t == "gibson_ashby":
        if "solid" not in m or "phi" not in m:
            raise ConfigError("gibson_ashby material needs solid and phi")
        return porous(build_isotropic(m["solid"]), float(m["phi"]))
    if t == "channels":
        dims = {"E": "stress", "nu": "dimensionless", "kappa": "conductivity", "alpha_th": "expansion"}
        consts = {}
        for k, v in m.get("constants", {}).items():
            if k not in dims:
                raise ConfigError(f"unknown material property {k!r}")
            consts[k] = qty(v, dims[k])
        for k in m.get("bindings", {}):
            if k not in dims:
                raise ConfigError(f"unknown material property {k!r}")
        fld = MaterialField(dict(m.get("bindings", {})), consts)
        for c in vm.cells:
            try:
                fld.validate(c.spline)
            except KeyError as exc:
                raise ConfigError(f"V-cell {c.id}: {exc.args[0]}") from None
        return CellChannels(vm, {}, fld)
    if t == "table":
        path = resolve_path(m["file"], base)
        try:
            with open(path) as fh:
                table = EffectiveTensorTable.from_json(fh.read())
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"table file malformed: {exc}") from None
        if "diameter" not in m or "angle" not in m:
            raise ConfigError("table material needs diameter and angle fields")
        # table diameters are stored in mm
        return TableMaterial(table, field_value(m["diameter"], "length", "mm"), field_value(m["angle"], "angle"))
    raise ConfigError(f"unknown material type {t!r}")


def build_bcs(bcs: list, vm):
    """Split boundary conditions into ``(elastic, heat)`` lists of records."""
    from ..fcm import HeatDirichlet, HeatFlux, Neumann, PenaltyDirichlet

    el, heat = [], []
    for b in bcs:
        sup = face_support(vm, b["support"])
        t = b["type"]
        if t == "displacement":
            comps = tuple(b.get("components", (0, 1, 2)))
            val = b.get("value", 0)
            if isinstance(val, (int, float)) and val == 0:
                v = np.zeros(len(comps))
            elif isinstance(val, list) and len(val) == len(comps) and all(isinstance(x, (str, dict, list)) for x in val):
                v = np.array([qty(x, "length") for x in val])
            else:
                v = np.full(len(comps), qty(val, "length"))
            el.append(PenaltyDirichlet(sup, comps, v))
        elif t == "traction":
            if "value" not in b:
                raise ConfigError("traction needs a value")
            el.append(Neumann(sup, vec(b["value"], "stress")))
        elif t == "temperature":
            heat.append(HeatDirichlet(sup, qty(b["value"], "temperature")))
        elif t == "heat_flux":
            heat.append(HeatFlux(sup, qty(b["value"], "heat_flux")))
    return el, heat


__all__ = [
    "ConfigError", "InputError", "SCHEMA", "Context", "validate", "load_config", "qty", "vec",
    "compile_expr", "field_value", "resolve_path", "build_geometry", "check_files", "face_support",
    "build_isotropic", "build_material", "build_bcs",
]
