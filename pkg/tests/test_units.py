import numpy as np
import pytest
from hypothesis import given, strategies as st

from vrepfcm.cli.config import ConfigError, compile_expr
from vrepfcm.units import UnitError, convert, parse_quantity


@pytest.mark.parametrize(
    "q, dim, target, expect",
    [
        ("210 GPa", "stress", "kN/cm^2", 21000.0),
        ([634, "kN/cm^2"], "stress", "MPa", 6340.0),
        ({"value": [1, 2], "unit": "mm"}, "length", "cm", [0.1, 0.2]),
        ("90 deg", "angle", "deg", 90.0),
        (0.3, "dimensionless", "", 0.3),
    ],
)
def test_parse_quantity(q, dim, target, expect):
    np.testing.assert_allclose(parse_quantity(q, dim, target), expect, rtol=1e-15)


@pytest.mark.parametrize("q, dim", [(210.0, "stress"), ("1 cm", "stress"), ("12 parsecs", "length"), ("GPa", "stress")])
def test_bad_quantities(q, dim):
    with pytest.raises(UnitError):
        parse_quantity(q, dim, "MPa" if dim == "stress" else "cm")


@given(st.floats(-1e6, 1e6), st.sampled_from(["Pa", "kPa", "MPa", "GPa", "kN/cm^2"]))
def test_stress_round_trip(v, unit):
    assert convert(convert(v, unit, "MPa"), "MPa", unit) == pytest.approx(v, rel=1e-12, abs=1e-12)


def test_expression_evaluates_on_points():
    f = compile_expr("1e5 + 5e4*sin(pi*z)")
    X = np.array([[0.0, 0.0, 0.5], [1.0, 2.0, 0.0]])
    np.testing.assert_allclose(f(X), [1.5e5, 1e5])


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "open('f')", "1 +"])
def test_expression_rejects_unsafe_or_bad_input(text):
    with pytest.raises(ConfigError):
        compile_expr(text)(np.zeros((1, 3)))
