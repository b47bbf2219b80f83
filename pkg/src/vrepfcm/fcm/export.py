"""Rectilinear sampling of solution fields into legacy ASCII VTK image data."""

from __future__ import annotations

import numpy as np

from .analysis import SolutionField

_FMT = "%.17g"


def sample_grid(lo, hi, shape) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid points in VTK order (x fastest) plus origin and spacing."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise ValueError("grid shape needs three positive counts")
    axes = [np.linspace(a, b, n) if n > 1 else np.array([0.5 * (a + b)]) for a, b, n in zip(lo, hi, shape)]
    Z, Y, X = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
    pts = np.c_[X.ravel(), Y.ravel(), Z.ravel()]
    spacing = np.array([(b - a) / (n - 1) if n > 1 else 1.0 for a, b, n in zip(lo, hi, shape)])
    origin = np.array([ax[0] for ax in axes])
    return pts, origin, spacing


def _channels(sol: SolutionField, x: np.ndarray, hits) -> dict[str, np.ndarray]:
    """Material channel values at physical points (nan in the fictitious domain)."""
    s = sol.system
    out: dict[str, np.ndarray] = {}
    ins = np.flatnonzero(hits.inside)
    vm = getattr(s.material, "vmodel", None)
    if vm is not None and len(ins):
        h = hits if hits.cell is not None and hits.param is not None else vm.locate(x)
        for cid in np.unique(h.cell[ins]):
            if cid < 0:
                continue
            sp = vm.cell(int(cid)).spline
            sel = ins[h.cell[ins] == cid]
            vals = sp.evaluate(h.param[sel])
            for k, nm in enumerate(sp.channel_names):
                arr = out.setdefault(nm, np.full(len(x), np.nan))
                arr[sel] = vals[:, 3 + k]
        return out
    if s.kind == "elastic":
        C = np.full(len(x), np.nan)
        if len(ins):
            C[ins] = s.material.stiffness(x[ins], hits.subset(ins))[:, 0, 0]
        out["C11"] = C
    else:
        k = np.full(len(x), np.nan)
        if len(ins):
            k[ins] = s.material.conductivity(x[ins], hits.subset(ins))
        out["kappa"] = k
    return out


def sample_fields(sol: SolutionField, lo, hi, shape, thermal: SolutionField | None = None) -> dict:
    """Point arrays of the fields exported for ``sol`` on a ``shape`` grid over ``[lo, hi]``."""
    pts, origin, spacing = sample_grid(lo, hi, shape)
    s = sol.system
    # points outside the mesh cannot be evaluated
    inside_mesh = np.all((pts >= s.mesh.lo - 1e-12) & (pts <= s.mesh.hi + 1e-12), axis=1)
    if not inside_mesh.all():
        raise ValueError("sampling grid extends beyond the analysis mesh")
    hits = s.indicator.membership(pts)
    alpha = np.where(hits.inside, 1.0, s.alpha)
    fields: dict[str, np.ndarray] = {"alpha": alpha}
    if s.kind == "elastic":
        fields["displacement"] = sol.evaluate(pts)
        fields["von_mises"] = sol.von_mises(pts)
        th = thermal if thermal is not None else s.thermal
        if th is not None:
            fields["temperature"] = th.evaluate(pts)
    else:
        fields["temperature"] = sol.evaluate(pts)
    fields.update(_channels(sol, pts, hits))
    return {"origin": origin, "spacing": spacing, "shape": tuple(int(n) for n in shape), "fields": fields}


def write_vtk(path, origin, spacing, shape, fields: dict, title: str = "vrepfcm fields"):
    """Legacy ASCII ``STRUCTURED_POINTS`` file; floats written with 17 significant digits."""
    n = int(np.prod(shape))
    lines = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS %d %d %d" % tuple(shape),
        "ORIGIN " + " ".join(_FMT % v for v in origin),
        "SPACING " + " ".join(_FMT % v for v in spacing),
        f"POINT_DATA {n}",
    ]
    for name, arr in fields.items():
        a = np.asarray(arr, dtype=float)
        if a.shape[0] != n:
            raise ValueError(f"field {name!r} has {a.shape[0]} values, expected {n}")
        if a.ndim == 2 and a.shape[1] == 3:
            lines.append(f"VECTORS {name} double")
            lines.extend(" ".join(_FMT % v for v in row) for row in a)
        elif a.ndim == 1:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_FMT % v for v in a)
        else:
            raise ValueError(f"field {name!r}: only scalars and 3-vectors are supported")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path) -> dict:
    """Inverse of :func:`write_vtk`: ``{"origin", "spacing", "shape", "fields"}``."""
    with open(path) as fh:
        tok = fh.read().split("\n")
    it = iter(tok[3:])
    head = {}
    fields: dict[str, np.ndarray] = {}
    n = None
    for line in it:
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key == "DIMENSIONS":
            head["shape"] = tuple(int(v) for v in parts[1:4])
        elif key in ("ORIGIN", "SPACING"):
            head[key.lower()] = np.array([float(v) for v in parts[1:4]])
        elif key == "POINT_DATA":
            n = int(parts[1])
        elif key == "SCALARS":
            next(it)  # lookup table
            fields[parts[1]] = np.array([float(next(it)) for _ in range(n)])
        elif key == "VECTORS":
            fields[parts[1]] = np.array([[float(v) for v in next(it).split()] for _ in range(n)])
    head["fields"] = fields
    return head


def export_fields(sol: SolutionField, path, lo=None, hi=None, shape=(20, 20, 20), thermal=None) -> dict:
    """Sample ``sol`` on a rectilinear grid (default: the mesh box) and write a VTK file."""
    lo = sol.mesh.lo if lo is None else lo
    hi = sol.mesh.hi if hi is None else hi
    data = sample_fields(sol, lo, hi, shape, thermal)
    write_vtk(path, data["origin"], data["spacing"], data["shape"], data["fields"])
    return data
