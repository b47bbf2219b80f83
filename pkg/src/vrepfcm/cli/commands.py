"""Subcommand implementations. Each takes ``(ctx, report, out_dir)`` and returns an exit code."""

from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from .config import (
    ConfigError,
    Context,
    InputError,
    build_bcs,
    build_geometry,
    build_isotropic,
    build_material,
    field_value,
    qty,
    resolve_path,
    vec,
)
from .report import RunReport

# ---------------------------------------------------------------------------
# output helpers


def _write(out: str, name: str, text: str, report: RunReport) -> str:
    path = os.path.join(out, name)
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None
    report.outputs.append(name)
    return path


def _csv(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# analysis pipeline shared by solve / convergence / sweep


def _mesh_settings(ctx: Context, overrides: dict | None = None) -> dict:
    m = dict(ctx.cfg.get("mesh", {}))
    m.update(overrides or {})
    if "divisions" not in m:
        raise ConfigError("mesh.divisions is required")
    if not m.get("conforming", False) and "margin" not in m:
        raise ConfigError("mesh.margin is required (with a length unit) unless mesh.conforming is set")
    return m


def _membership(ctx: Context, vm):
    mcfg = ctx.cfg.get("membership", {})
    engine = ctx.engine or mcfg.get("engine", "inverse")
    return vm.membership(engine, resolution=mcfg.get("resolution", 16), seed=ctx.seed) if engine == "ray" \
        else vm.membership("inverse", use_cache=mcfg.get("cache", True))


def _problem(ctx: Context):
    """Geometry, material and boundary conditions of the configured analysis."""
    vm = build_geometry(ctx.section("geometry"), ctx.base)
    material = build_material(ctx.section("material"), vm, ctx.base)
    el, heat = build_bcs(ctx.cfg.get("bcs", []), vm)
    kind = ctx.cfg.get("analysis", {}).get("type", "elastic")
    if kind == "elastic" and heat:
        raise ConfigError("thermal boundary conditions in an elastic analysis")
    if kind == "heat" and el:
        raise ConfigError("mechanical boundary conditions in a heat analysis")
    return vm, material, el, heat, kind


def _setup(ctx: Context, vm, p: int, mesh_cfg: dict):
    from ..fcm import FiniteCellMesh, Indicator
    from ..membership import everywhere

    lo, hi = vm.bbox
    div = mesh_cfg["divisions"]
    q = float(mesh_cfg.get("q", 8.0))
    if mesh_cfg.get("conforming", False):
        # boundary-conforming reference mode: the mesh is the model's bounding box
        return FiniteCellMesh(lo, hi, div, p), Indicator(everywhere(), q), 0
    margin = qty(mesh_cfg["margin"], "length")
    mesh = FiniteCellMesh.around(lo, hi, margin, div, p)
    return mesh, Indicator(_membership(ctx, vm), q), int(mesh_cfg.get("depth", 4))


def _assemble(ctx, problem, p, mesh_cfg, report: RunReport, beta=None):
    """Assembled system(s) for one degree: ``(system, heat_solution_or_None)``."""
    from ..fcm import assemble_elasticity, assemble_heat, discretize, solve

    vm, material, el, heat, kind = problem
    mesh, ind, depth = _setup(ctx, vm, p, mesh_cfg)
    with report.phase("quadrature"):
        quad = discretize(mesh, ind, depth)
    report.quadrature_points = int(quad.n_points)
    theta = None
    if kind in ("heat", "thermo_elastic"):
        with report.phase("assemble"):
            hs = assemble_heat(mesh, ind, material, heat, depth, quad)
        if kind == "heat":
            return hs, None
        with report.phase("solve"):
            theta = solve(hs)
        report.residuals["heat"] = float(theta.residual)
        report.warnings.extend(theta.warnings)
    tref = qty(ctx.cfg["analysis"]["theta_ref"], "temperature") if "theta_ref" in ctx.cfg.get("analysis", {}) else 0.0
    with report.phase("assemble"):
        sysm = assemble_elasticity(mesh, ind, material, el, depth, quad, thermal=theta, theta_ref=tref, beta=beta)
    return sysm, theta


def _solve(system, report: RunReport, label: str):
    from ..fcm import solve

    with report.phase("solve"):
        sol = solve(system)
    report.residuals[label] = float(sol.residual)
    report.residuals[label + "_backward_error"] = float(sol.backward_error)
    report.warnings.extend(sol.warnings)
    report.dofs = int(system.n)
    with report.phase("energy"):
        energy = sol.strain_energy() if system.kind == "elastic" else sol.energy_from_matrix()
    return sol, energy


def _degrees(mesh_cfg: dict) -> list[int]:
    p = mesh_cfg.get("p", 2)
    return [int(v) for v in (p if isinstance(p, list) else [p])]


def _profile_rows(sol, spec: dict, kind: str):
    a, b = vec(spec["from"], "length"), vec(spec["to"], "length")
    n = int(spec.get("n", 11))
    s = np.linspace(0.0, 1.0, n)
    X = a + s[:, None] * (b - a)
    fld = spec.get("field", "temperature" if kind == "heat" else "displacement")
    if fld == "temperature":
        src = sol if kind == "heat" else sol.system.thermal
        if src is None:
            raise ConfigError("no temperature field in this analysis")
        cols, V = ["temperature"], src.evaluate(X)[:, None]
    elif fld == "displacement":
        cols, V = ["ux", "uy", "uz"], sol.evaluate(X)
    elif fld == "von_mises":
        cols, V = ["von_mises"], sol.von_mises(X)[:, None]
    elif fld == "flux":
        cols, V = ["qx", "qy", "qz"], sol.flux(X)
    else:
        raise ConfigError(f"unknown profile field {fld!r}")
    rows = [[s[i], *X[i], *V[i]] for i in range(n)]
    return _csv(rows, ["s", "x", "y", "z", *cols])


# ---------------------------------------------------------------------------
# commands


def cmd_solve(ctx: Context, report: RunReport, out: str) -> int:
    from ..fcm import export_fields

    problem = _problem(ctx)
    mesh_cfg = _mesh_settings(ctx)
    rows = []
    sol = None
    for p in _degrees(mesh_cfg):
        system, _ = _assemble(ctx, problem, p, mesh_cfg, report)
        sol, energy = _solve(system, report, f"p{p}")
        rows.append([p, system.n, energy])
        report.energy = energy
    _write(out, "energy.csv", _csv(rows, ["p", "dofs", "energy"]), report)
    report.results["energies"] = {str(r[0]): r[2] for r in rows}
    outputs = ctx.cfg.get("outputs", {})
    vtk = outputs.get("vtk", True)
    if vtk:
        shape = vtk.get("shape", [20, 20, 20]) if isinstance(vtk, dict) else [20, 20, 20]
        with report.phase("export"):
            try:
                export_fields(sol, os.path.join(out, "fields.vtk"), shape=shape)
            except OSError as exc:
                raise InputError(f"cannot write fields.vtk: {exc.strerror}") from None
        report.outputs.append("fields.vtk")
    if "profile" in outputs:
        _write(out, "profile.csv", _profile_rows(sol, outputs["profile"], problem[4]), report)
    print(f"energy {report.energy!r} ({report.dofs} dofs)")
    return 0


def _reference_energy(ctx: Context, problem, report: RunReport) -> float:
    conv = ctx.cfg.get("convergence", {})
    ref = conv.get("reference")
    if not ref:
        raise ConfigError("convergence.reference is required (an energy or an overkill mesh)")
    if "energy" in ref:
        return qty(ref["energy"], "energy")
    over = {k: ref[k] for k in ("divisions", "conforming", "depth", "margin", "q") if k in ref}
    if "p" not in ref:
        raise ConfigError("reference run needs p")
    mesh_cfg = _mesh_settings(ctx, over)
    with report.phase("reference"):
        system, _ = _assemble(ctx, problem, int(ref["p"]), mesh_cfg, report)
        _, energy = _solve(system, report, "reference")
    report.results["reference"] = {"p": int(ref["p"]), "dofs": int(system.n), "energy": energy}
    return energy


def cmd_convergence(ctx: Context, report: RunReport, out: str) -> int:
    problem = _problem(ctx)
    conv = ctx.section("convergence")
    mesh_cfg = _mesh_settings(ctx)
    e_ref = _reference_energy(ctx, problem, report)
    rows = []
    for p in conv.get("p", _degrees(mesh_cfg)):
        system, _ = _assemble(ctx, problem, int(p), mesh_cfg, report)
        _, energy = _solve(system, report, f"p{p}")
        rows.append([int(p), int(system.n), energy, abs(energy - e_ref) / abs(e_ref)])
        print(f"p={p} dofs={system.n} energy={energy!r} rel_error={rows[-1][3]:.3e}")
    _write(out, "convergence.csv", _csv(rows, ["p", "dofs", "energy", "rel_error"]), report)
    errs = [r[3] for r in rows]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    if not monotone:
        report.warnings.append("relative error is not strictly decreasing in p")
    report.results.update({"reference_energy": e_ref, "rel_error": errs, "monotone": monotone})
    report.energy = rows[-1][2]
    return 0


def cmd_sweep(ctx: Context, report: RunReport, out: str) -> int:
    from ..fcm.analysis import PENALTY_FACTOR

    problem = _problem(ctx)
    sw = ctx.section("sweep")
    mesh_cfg = _mesh_settings(ctx)
    p = _degrees(mesh_cfg)[-1]
    par, values = sw["parameter"], sw["values"]
    base, _ = _assemble(ctx, problem, p, mesh_cfg, report)
    _, e_base = _solve(base, report, "base")
    rows = []
    for v in values:
        if par == "q":
            system = base.with_q(float(v))
        elif par == "depth":
            if int(v) != v or v < 0:
                raise ConfigError("depth values must be nonnegative integers")
            system, _ = _assemble(ctx, problem, p, dict(mesh_cfg, depth=int(v)), report)
        else:
            if not v > 0:
                raise ConfigError("beta factors must be positive")
            system, _ = _assemble(ctx, problem, p, mesh_cfg, report, beta=base.beta * float(v) / PENALTY_FACTOR)
        _, e = _solve(system, report, f"{par}={v:g}")
        rows.append([float(v), int(system.n), e, abs(e - e_base) / abs(e_base)])
        print(f"{par}={v:g} energy={e!r} drift={rows[-1][3]:.3e}")
    _write(out, "sweep.csv", _csv(rows, [par, "dofs", "energy", "drift"]), report)
    report.energy = e_base
    report.results.update({"parameter": par, "base_energy": e_base, "max_drift": max(r[3] for r in rows)})
    return 0


def cmd_fit_material(ctx: Context, report: RunReport, out: str) -> int:
    from ..material import RankDeficientError, attach_channel, fit_least_squares, fit_residual
    from ..units import dimension_of
    from ..vmodel import VModel

    vm = build_geometry(ctx.section("geometry"), ctx.base)
    fit = ctx.section("fit")
    cid = fit.get("cell", vm.ids[0])
    try:
        cell = vm.cell(cid)
    except KeyError:
        raise ConfigError(f"fit.cell {cid} not in the model") from None
    target = fit["target"]
    unit = target.get("unit", "") if isinstance(target, dict) else ""
    try:
        dim = dimension_of(unit)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    f = field_value(target, dim)
    f = f if callable(f) else (lambda X, c=f: np.full(len(X), c))
    n = fit.get("n_samples", 100)
    mode = fit.get("mode", "clamped")
    channel = fit.get("channel", "E")
    with report.phase("fit"):
        mu = fit_least_squares(cell.spline, f, n, mode)
    n0 = int(np.min(np.broadcast_to(n, (3,))))
    rows = []
    with report.phase("residual"):
        for m in range(n0, 1, -1):
            if (n0 - 1) % (m - 1):
                continue
            try:
                mu_m = fit_least_squares(cell.spline, f, m, mode)
            except (RankDeficientError, ValueError):
                break
            rows.append([m, n0, fit_residual(cell.spline, mu_m, f, n0)])
    sp = attach_channel(cell.spline, channel, mu)
    cells = tuple(c if c.id != cid else type(c)(sp, c.id) for c in vm.cells)
    vm2 = VModel(cells, vm.csg, vm.tol_geom)
    _write(out, "model.json", vm2.to_json() + "\n", report)
    _write(out, "mu.json", _json({"cell": cid, "channel": channel, "dims": list(mu.shape), "mu": mu.tolist()}), report)
    _write(out, "residual.csv", _csv(rows, ["fit_samples", "eval_samples", "rms_residual"]), report)
    report.residuals["fit_rms"] = rows[0][2] if rows else None
    # a field depending on one direction only has identical coefficient columns
    flat = mu.reshape(-1, mu.shape[-1])
    if np.allclose(flat, flat[0], rtol=0, atol=1e-9 * max(1.0, np.abs(mu).max())):
        report.results["mu_w"] = flat[0].tolist()
        print("mu_w =", " ".join(f"{v:.6f}" for v in flat[0]))
    return 0


def _points(ctx: Context, vm) -> np.ndarray:
    pts = ctx.cfg.get("points", {})
    if "file" in pts:
        path = resolve_path(pts["file"], ctx.base)
        try:
            with open(path) as fh:
                rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        except OSError as exc:
            raise InputError(f"cannot read points {path}: {exc.strerror}") from None
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        try:
            X = np.array([[float(v) for v in r[:3]] for r in rows], dtype=float).reshape(-1, 3)
        except ValueError:
            raise InputError(f"points file {pts['file']} is not a numeric x,y,z table") from None
        return X * qty([1.0, pts.get("unit", "cm")], "length")
    n = int(pts.get("sample", 10000))
    lo, hi = vm.bbox
    return np.random.default_rng(ctx.seed).uniform(lo, hi, (n, 3))


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def cmd_membership(ctx: Context, report: RunReport, out: str) -> int:
    from ..vmodel import csg_leaves, tessellate_cells

    vm = build_geometry(ctx.section("geometry"), ctx.base)
    X = _points(ctx, vm)
    mcfg = ctx.cfg.get("membership", {})
    res = int(mcfg.get("resolution", 16))
    engine = ctx.engine or mcfg.get("engine", "inverse")
    with report.phase(engine):
        h = vm.membership(engine, resolution=res, seed=ctx.seed)(X) if engine == "ray" else vm.membership("inverse")(X)
    rows = [[*X[i], int(h.inside[i]), int(h.cell[i]) if h.cell is not None else -1] for i in range(len(X))]
    _write(out, "membership.csv", _csv(rows, ["x", "y", "z", "inside", "cell"]), report)
    report.results.update({"engine": engine, "points": len(X), "inside": int(h.inside.sum())})
    if ctx.extra.get("cross_check"):
        other = "ray" if engine == "inverse" else "inverse"
        with report.phase(other):
            h2 = vm.membership(other, resolution=res, seed=ctx.seed)(X) if other == "ray" else vm.membership("inverse")(X)
        bad = np.flatnonzero(h.inside != h2.inside)
        dist = np.full(len(bad), np.inf)
        if len(bad):
            with report.phase("distance"):
                for lf in csg_leaves(vm.csg):
                    tb = tessellate_cells(vm, lf.cells, 4 * res)
                    dist = np.minimum(dist, tb.distance(X[bad]))
        frac = len(bad) / max(len(X), 1)
        a = {"inverse": h, "ray": h2} if engine == "inverse" else {"inverse": h2, "ray": h}
        rows = [[*X[i], int(a["inverse"].inside[i]), int(a["ray"].inside[i]), d] for i, d in zip(bad, dist)]
        _write(out, "crosscheck.csv", _csv(rows, ["x", "y", "z", "inverse", "ray", "distance"]), report)
        report.results["cross_check"] = {
            "resolution": res,
            "disagreements": int(len(bad)),
            "fraction": frac,
            "max_distance": float(dist.max()) if len(bad) else 0.0,
        }
        print(f"disagreement {len(bad)}/{len(X)} = {frac:.2e}")
    print(f"{report.results['inside']} of {len(X)} points inside ({engine})")
    return 0


def cmd_tessellate(ctx: Context, report: RunReport, out: str) -> int:
    from ..vmodel import tessellate

    vm = build_geometry(ctx.section("geometry"), ctx.base)
    res = ctx.extra.get("resolution") or ctx.cfg.get("tessellation", {}).get("resolution") \
        or ctx.cfg.get("membership", {}).get("resolution", 16)
    with report.phase("tessellate"):
        tb = tessellate(vm, int(res))
    path = os.path.join(out, "boundary.stl")
    try:
        tb.write_stl(path)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None
    report.outputs.append("boundary.stl")
    report.results.update({
        "resolution": int(res), "triangles": tb.n_triangles, "watertight": tb.is_watertight(),
        "area": tb.area(), "volume": tb.volume(),
    })
    print(f"{tb.n_triangles} triangles, area {tb.area():.6g}, volume {tb.volume():.6g}")
    return 0


# ---------------------------------------------------------------------------
# homogenization, tables and tensors


def _rve(spec: dict, material, settings: dict):
    from ..homogenize import RVE, ParametricTile
    from ..membership import Membership, box_membership

    t = spec.get("type", "solid")
    div = tuple(settings.get("divisions", (6, 6, 6)))
    p, depth, q = int(settings.get("p", 3)), int(settings.get("depth", 4)), float(settings.get("q", 8.0))
    if t == "tile":
        if "diameters" not in spec or "size" not in spec:
            raise ConfigError("tile RVE needs diameters and size")
        # tile geometry in mm
        d = tuple(qty(v, "length", "mm") for v in spec["diameters"])
        size = qty(spec["size"], "length", "mm")
        rot = qty(spec.get("rotation", "0 deg"), "angle")
        tile = ParametricTile(d, size, rot)
        try:
            return RVE.from_tile(tile, material, div, p, depth, q), {}
        except ValueError as exc:
            raise ConfigError(f"tile: {exc}") from None
    size = qty(spec.get("size", "1 cm"), "length")
    lo, hi = np.zeros(3), np.full(3, size)
    if t == "solid":
        return RVE(lo, hi, box_membership(lo, hi), material, div, p, depth, q), {}
    if t == "laminate":
        axis = int(spec.get("axis", 2))
        frac = float(spec.get("fraction", 0.5))
        contrast = float(spec.get("contrast", 10.0))
        if not (0 < frac < 1 and contrast > 1 and axis in (0, 1, 2)):
            raise ConfigError("laminate needs 0 < fraction < 1, contrast > 1 and axis in 0..2")
        # the soft phase is the fictitious region with alpha = 1 / contrast
        cut = frac * size
        rve = RVE(lo, hi, Membership(lambda x: x[:, axis] <= cut), material, div, p, depth, float(np.log10(contrast)))
        return rve, {"axis": axis, "fraction": frac, "contrast": contrast}
    raise ConfigError(f"unknown RVE type {t!r}")


def _homogenize(spec: dict, material, report: RunReport, label: str = ""):
    from ..homogenize import effective_tensor

    rve, extra = _rve(spec["rve"], material, spec)
    with report.phase("homogenize" + label):
        res = effective_tensor(rve)
    report.dofs = int(res.n_dofs)
    report.quadrature_points = int(res.n_points)
    report.warnings.extend(res.solution.warnings)
    return res, extra


def cmd_homogenize(ctx: Context, report: RunReport, out: str) -> int:
    from ..homogenize import laminate_normal_modulus
    from ..material import format_tensor, isotropic_to_voigt

    h = ctx.section("homogenize")
    material = build_isotropic(h["material"])
    res, extra = _homogenize(h, material, report)
    C = np.asarray(res.tensor)
    _write(out, "tensor.txt", format_tensor(C) + "\n", report)
    doc = {
        "unit": res.tensor.unit, "C": C.tolist(), "raw": res.raw.tolist(), "symmetry": res.symmetry,
        "asymmetry": res.asymmetry, "dofs": res.n_dofs, "quadrature_points": res.n_points,
    }
    if extra:
        Cs = np.asarray(isotropic_to_voigt(material))
        a = extra["axis"]
        closed = laminate_normal_modulus(Cs[a, a], Cs[a, a] / extra["contrast"], extra["fraction"])
        doc["laminate"] = dict(extra, closed_form_normal=closed, computed_normal=float(C[a, a]),
                               rel_error=abs(C[a, a] - closed) / closed)
    _write(out, "tensor.json", _json(doc), report)
    rows = [[j, c.hill_mandel_gap, c.constraint_residual] for j, c in enumerate(res.cases)]
    _write(out, "hill_mandel.csv", _csv(rows, ["case", "gap", "seam_residual"]), report)
    report.residuals["hill_mandel_max"] = float(res.gaps.max())
    report.results.update({"symmetry": res.symmetry, "C": C.tolist()})
    print(format_tensor(C))
    print(f"symmetry: {res.symmetry}; max Hill-Mandel gap {res.gaps.max():.2e}")
    return 0


def _tensor_from(spec: dict, base: str, unit: str):
    from ..material import ElasticityTensor, parse_tensor

    try:
        if "tensor_file" in spec or "file" in spec:
            path = resolve_path(spec.get("tensor_file", spec.get("file")), base)
            with open(path) as fh:
                text = fh.read()
            if text.lstrip().startswith("{"):
                d = json.loads(text)
                return ElasticityTensor(d["C"], d.get("unit", unit))
            return parse_tensor(text, unit)
        if "C" in spec or "tensor" in spec:
            return ElasticityTensor(spec.get("C", spec.get("tensor")), unit)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad tensor: {exc}") from None
    raise ConfigError("tensor needs C / tensor values or a tensor_file")


def _angles(spec, default=None):
    if spec is None:
        return default
    if isinstance(spec, dict) and isinstance(spec.get("value"), list):
        return [qty([float(v), spec.get("unit", "")], "angle") for v in spec["value"]]
    if isinstance(spec, list):
        return [qty(v, "angle") for v in spec]
    raise ConfigError(f"bad angle list {spec!r}")


def cmd_table_build(ctx: Context, report: RunReport, out: str) -> int:
    from ..material import build_table

    t = ctx.section("table")
    unit = t.get("unit", "kN/cm^2")
    samples = []
    for k, s in enumerate(t.get("samples", [])):
        if "diameter" not in s:
            raise ConfigError(f"table sample {k} needs a diameter")
        d_mm = qty(s["diameter"], "length", "mm")
        if "rve" in s:
            if "material" not in t:
                raise ConfigError("table.material is required to homogenize samples")
            spec = dict(t.get("homogenize", {}), rve=s["rve"])
            res, _ = _homogenize(spec, build_isotropic(t["material"]), report, f"[{k}]")
            C = res.tensor
        else:
            C = _tensor_from(s, ctx.base, unit)
        samples.append((d_mm, C))
    try:
        table = build_table(samples, _angles(t.get("angles")), t.get("interpolation", "cubic"))
    except ValueError as exc:
        raise ConfigError(f"table: {exc}") from None
    _write(out, "table.json", table.to_json() + "\n", report)
    report.results.update({"diameters_mm": table.diameters.tolist(), "angles_deg": table.angles.tolist()})
    print(f"table with {len(table.diameters)} diameters x {len(table.angles)} angles")
    return 0


def _flag_quantity(text: str, dimension: str, default_unit: str) -> float:
    # bare numbers are taken in the default unit
    try:
        return float(text)
    except ValueError:
        pass
    return qty(text, dimension, default_unit)


def cmd_table_query(ctx: Context, report: RunReport, out: str) -> int:
    from ..material import PATTERN, EffectiveTensorTable, format_tensor

    path = ctx.extra.get("table") or ctx.cfg.get("table", {}).get("file")
    if not path:
        raise ConfigError("table query needs --table or table.file")
    path = resolve_path(path, ctx.base)
    try:
        with open(path) as fh:
            table = EffectiveTensorTable.from_json(fh.read())
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"table file malformed: {exc}") from None
    if ctx.extra.get("diameter") is None or ctx.extra.get("angle") is None:
        raise ConfigError("table query needs --diameter and --angle")
    d = _flag_quantity(ctx.extra["diameter"], "length", "mm")
    a = _flag_quantity(ctx.extra["angle"], "angle", "deg")
    try:
        C = table.query(d, a)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    M = np.asarray(C)
    coeffs = {f"C{i + 1}{j + 1}": float(M[i, j]) for i, j in PATTERN}
    _write(out, "query.json", _json({"diameter_mm": d, "angle_deg": a, "unit": C.unit, "C": M.tolist(),
                                     "coefficients": coeffs}), report)
    report.results.update({"diameter_mm": d, "angle_deg": a, "positive_definite": C.is_positive_definite()})
    print(format_tensor(M))
    return 0


def cmd_rotate_tensor(ctx: Context, report: RunReport, out: str) -> int:
    from ..homogenize import rows_to_csv, sweep_rotations
    from ..material import classify_symmetry, format_tensor, rotate_tensor

    spec = dict(ctx.cfg.get("tensor", {}))
    if ctx.extra.get("tensor"):
        spec = {"tensor_file": ctx.extra["tensor"], "unit": spec.get("unit", "kN/cm^2")}
    C = _tensor_from(spec, ctx.base, spec.get("unit", "kN/cm^2"))
    if ctx.extra.get("angle") is not None:
        angle = _flag_quantity(ctx.extra["angle"], "angle", "deg")
    elif "angle" in spec:
        angle = qty(spec["angle"], "angle")
    else:
        raise ConfigError("rotate-tensor needs an angle (tensor.angle or --angle)")
    R = rotate_tensor(C, angle)
    M = np.asarray(R)
    _write(out, "rotated.txt", format_tensor(M) + "\n", report)
    _write(out, "rotated.json", _json({"angle_deg": angle, "unit": R.unit, "C": M.tolist(),
                                       "symmetry": classify_symmetry(M)}), report)
    angles = _angles(spec.get("angles"))
    if angles:
        _write(out, "rotation_sweep.csv", rows_to_csv(sweep_rotations(C, angles)), report)
    report.results.update({"angle_deg": angle, "symmetry_in": classify_symmetry(C), "symmetry_out": classify_symmetry(M)})
    print(format_tensor(M))
    return 0


COMMANDS = {
    "fit-material": cmd_fit_material,
    "membership": cmd_membership,
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "homogenize": cmd_homogenize,
    "table build": cmd_table_build,
    "table query": cmd_table_query,
    "rotate-tensor": cmd_rotate_tensor,
    "sweep": cmd_sweep,
    "tessellate": cmd_tessellate,
}
