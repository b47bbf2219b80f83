import json
import os

import numpy as np
import pytest

from vrepfcm.cli import main

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "demos", "configs")

BOX = {"type": "box", "lo": {"value": [0, 0, 0], "unit": "cm"}, "hi": {"value": [1, 1, 1], "unit": "cm"}}


def cfg_file(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, *args, out="out"):
    d = tmp_path / out
    code = main([*args, "--out", str(d)])
    report = json.loads((d / "report.json").read_text())
    return code, report, d


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


# ---------------------------------------------------------------------------
# exit codes and reports


def test_missing_config_file_is_io_error(tmp_path):
    code, report, _ = run(tmp_path, "solve", "--config", str(tmp_path / "nope.json"))
    assert code == 4 and report["error"]["category"] == "io"


def test_schema_violation_is_config_error(tmp_path):
    path = cfg_file(tmp_path, {"geometry": BOX, "mesh": {"divisions": [2, 2], "p": 1}})
    code, report, _ = run(tmp_path, "solve", "--config", path)
    assert code == 2 and report["status"] == "failed" and report["error"]["category"] == "config"


def test_bad_unit_is_config_error(tmp_path):
    doc = json.loads(open(os.path.join(CONFIGS, "heat_slab.json")).read())
    doc["material"]["E"] = "1000 furlongs"
    code, report, _ = run(tmp_path, "solve", "--config", cfg_file(tmp_path, doc))
    assert code == 2


def test_command_without_config(tmp_path):
    code, report, _ = run(tmp_path, "convergence")
    assert code == 2 and "requires --config" in report["error"]["message"]


def test_missing_points_file(tmp_path):
    path = cfg_file(tmp_path, {"geometry": BOX, "points": {"file": "pts.csv"}})
    code, report, _ = run(tmp_path, "membership", "--config", path)
    assert code == 4


# ---------------------------------------------------------------------------
# membership


def test_membership_of_listed_points(tmp_path):
    (tmp_path / "pts.csv").write_text("x,y,z\n0.5,0.5,0.5\n2,0.5,0.5\n0.1,0.9,0.2\n")
    path = cfg_file(tmp_path, {"geometry": BOX, "points": {"file": "pts.csv", "unit": "cm"}})
    for engine in ("inverse", "ray"):
        code, report, out = run(tmp_path, "membership", "--config", path, "--engine", engine, out=engine)
        assert code == 0
        header, rows = read_csv(out / "membership.csv")
        assert header == ["x", "y", "z", "inside", "cell"]
        assert [r[3] for r in rows] == ["1", "0", "1"]


def test_empty_points_file_gives_empty_csv(tmp_path):
    (tmp_path / "pts.csv").write_text("")
    path = cfg_file(tmp_path, {"geometry": BOX, "points": {"file": "pts.csv"}})
    code, report, out = run(tmp_path, "membership", "--config", path)
    assert code == 0
    header, rows = read_csv(out / "membership.csv")
    assert rows == [] and report["results"]["points"] == 0


def test_membership_is_deterministic(tmp_path):
    path = os.path.join(CONFIGS, "cylinder_membership.json")
    args = ["membership", "--config", path, "--engine", "ray", "--seed", "11", "--cross-check"]
    _, a, da = run(tmp_path, *args, out="a")
    _, b, db = run(tmp_path, *args, out="b")
    for name in ("membership.csv", "crosscheck.csv"):
        assert (da / name).read_bytes() == (db / name).read_bytes()
    a.pop("timings"), b.pop("timings")
    a.pop("outputs"), b.pop("outputs")
    assert a == b
    assert a["results"]["cross_check"]["fraction"] < 1e-3


# ---------------------------------------------------------------------------
# tensors and tables


def test_rotate_tensor_swaps_axes(tmp_path):
    code, _, out = run(tmp_path, "rotate-tensor", "--config", os.path.join(CONFIGS, "rotate_t2.json"))
    assert code == 0
    C = np.array(json.loads((out / "rotated.json").read_text())["C"])
    assert C[0, 0] == pytest.approx(11066.80, rel=1e-9) and C[1, 1] == pytest.approx(18246.81, rel=1e-9)
    header, rows = read_csv(out / "rotation_sweep.csv")
    assert header[0] == "angle_deg" and len(rows) == 7


def test_table_build_and_query(tmp_path):
    code, _, out = run(tmp_path, "table", "build", "--config", os.path.join(CONFIGS, "table_paper.json"), out="t")
    assert code == 0
    table = str(out / "table.json")
    code, report, q = run(tmp_path, "table", "query", "--table", table, "--diameter", "0.3 mm", "--angle", "0",
                          out="q")
    assert code == 0 and report["results"]["positive_definite"]
    C = np.array(json.loads((q / "query.json").read_text())["C"])
    assert C[0, 0] == pytest.approx(18246.81, rel=1e-9)
    assert C[4, 4] == pytest.approx(590.69, rel=1e-9)
    code, report, _ = run(tmp_path, "table", "query", "--table", table, "--diameter", "0.5 mm", "--angle", "0",
                          out="bad")
    assert code == 2 and report["error"]["category"] == "config"


# ---------------------------------------------------------------------------
# analyses


def test_fit_material_example(tmp_path):
    code, _, out = run(tmp_path, "fit-material", "--config", os.path.join(CONFIGS, "example1_fit.json"))
    assert code == 0
    mu = np.array(json.loads((out / "mu.json").read_text())["mu"])
    ref = [100000, 131438, 185772, 46415, 46415, 185772, 131438, 100000]
    assert np.abs(mu - np.array(ref)[None, None, :]).max() <= 0.5


def test_heat_slab_profile_is_linear(tmp_path):
    code, report, out = run(tmp_path, "solve", "--config", os.path.join(CONFIGS, "heat_slab.json"))
    assert code == 0 and report["dofs"] > 0
    header, rows = read_csv(out / "profile.csv")
    vals = np.array(rows, dtype=float)
    x, T = vals[:, 0], vals[:, header.index("temperature")]
    np.testing.assert_allclose(T, 10 + 20 * x, atol=1e-3)
    assert (out / "fields.vtk").exists()


def test_homogenize_solid_cell(tmp_path):
    doc = {"homogenize": {"rve": {"type": "solid", "size": "1 cm"},
                          "material": {"type": "isotropic", "E": "210 GPa", "nu": 0.3},
                          "divisions": [2, 2, 2], "p": 2, "depth": 0, "q": 8}}
    code, report, out = run(tmp_path, "homogenize", "--config", cfg_file(tmp_path, doc))
    assert code == 0
    C = np.array(json.loads((out / "tensor.json").read_text())["C"])
    E, nu = 21000.0, 0.3  # kN/cm^2
    lam, mu = E * nu / ((1 + nu) * (1 - 2 * nu)), E / (2 * (1 + nu))
    assert C[0, 0] == pytest.approx(lam + 2 * mu, rel=1e-10)
    assert C[3, 3] == pytest.approx(mu, rel=1e-10)
    header, rows = read_csv(out / "hill_mandel.csv")
    assert max(float(r[1]) for r in rows) <= 1e-12
