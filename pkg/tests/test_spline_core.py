import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from vrepfcm.spline_core import (
    DomainError,
    KnotVector,
    TrivariateSpline,
    basis_funs,
    design_matrix,
    eval_basis,
)

W = KnotVector([0, 0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1, 1, 1, 1], 3)


def perturbed_spline(seed=0, amp=0.05):
    sp = TrivariateSpline.box((0, 0, 0), (2, 3, 4))
    sp = sp.degree_elevate(0, 2).degree_elevate(1, 3).knot_insert(2, 0.4).degree_elevate(2, 2)
    c = np.array(sp.ctrl)
    c[..., :3] += np.random.default_rng(seed).uniform(-amp, amp, c[..., :3].shape)
    return TrivariateSpline(sp.knots, c)


SP = perturbed_spline()
params = arrays(np.float64, (8, 3), elements=st.floats(0.0, 1.0))


@pytest.mark.parametrize(
    "values, degree",
    [([0, 0, 1], 1), ([0, 1, 0.5, 1], 1), ([0, 0, 0, 1, 1], 1), ([0, 0, 1, 1, 1], 2), ([1, 1, 1, 1], 1)],
)
def test_knot_vector_validation(values, degree):
    with pytest.raises(ValueError):
        KnotVector(values, degree)


def test_eval_basis_endpoints():
    span, N = eval_basis(W, 0.0)
    assert span == 3 and N.tolist() == [1, 0, 0, 0]
    span, N = eval_basis(W, 1.0)
    assert span == W.n - 1 and N[-1] == 1.0


def test_out_of_range_parameter():
    with pytest.raises(DomainError):
        basis_funs(W, np.array([1.5]))


@given(arrays(np.float64, 20, elements=st.floats(0.0, 1.0)))
def test_partition_of_unity(t):
    A = design_matrix(W, t)
    assert np.all(A >= -1e-15)
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-13)


@given(params)
def test_inversion_round_trip(u):
    X = SP.evaluate(u)
    U, ok, _ = SP.invert_points(X)
    assert ok.all()
    np.testing.assert_allclose(SP.evaluate(U), X, atol=1e-9)
    np.testing.assert_allclose(U, u, atol=1e-7)


def test_far_point_not_found():
    assert SP.invert_point([10.0, 10.0, 10.0]) is None


@given(params, st.integers(0, 2), st.floats(0.05, 0.95), st.integers(1, 2))
def test_knot_insertion_preserves_map(u, d, t, m):
    np.testing.assert_allclose(SP.knot_insert(d, t, m).evaluate(u), SP.evaluate(u), atol=1e-12)


@given(params, st.integers(0, 2))
def test_degree_elevation_preserves_map(u, d):
    target = SP.degrees[d] + 1
    np.testing.assert_allclose(SP.degree_elevate(d, target).evaluate(u), SP.evaluate(u), atol=1e-12)


def test_jacobian_matches_finite_differences():
    P = np.random.default_rng(2).uniform(0.1, 0.9, (6, 3))
    J = SP.jacobian(P)
    h = 1e-6
    fd = np.stack([(SP.evaluate(P + h * e) - SP.evaluate(P - h * e)) / (2 * h) for e in np.eye(3)], axis=2)
    np.testing.assert_allclose(J, fd, atol=1e-7)


def test_boundary_faces_trace_volume():
    faces = SP.boundary_faces()
    q = np.random.default_rng(3).uniform(0, 1, (30, 2))
    one = np.ones(len(q))
    np.testing.assert_allclose(faces["u1"].evaluate(q), SP.evaluate(np.c_[one, q]), atol=1e-13)
    np.testing.assert_allclose(faces["w0"].evaluate(q), SP.evaluate(np.c_[q, 0 * one]), atol=1e-13)


def test_box_volume_and_regularity():
    sp = TrivariateSpline.box((0, 0, 0), (2, 3, 4))
    assert sp.volume() == pytest.approx(24.0, rel=1e-14)
    assert SP.is_regular()


def test_json_round_trip():
    sp = SP.with_channels(["E"], np.full(SP.dims, 5.0))
    back = TrivariateSpline.from_json(sp.to_json())
    assert np.array_equal(back.ctrl, sp.ctrl)
    assert back.knots == sp.knots
