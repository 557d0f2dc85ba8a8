import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from elastocheck.tensor import (
    as_mat3,
    cofactor3,
    det3,
    det_along_rank_one,
    frobenius_sq,
    is_rotation,
    random_rotation,
    right_cauchy_green,
)

F2 = np.diag([-1.0, -1.0, 1.0])
mats = arrays(np.float64, (3, 3), elements=st.floats(-2, 2, allow_nan=False, allow_infinity=False))
vecs = arrays(np.float64, 3, elements=st.floats(-2, 2, allow_nan=False, allow_infinity=False))


def f_lambda(lam):
    return lam * np.eye(3) + (1 - lam) * F2


def test_det3_examples():
    assert det3(np.eye(3)) == 1.0
    assert det3(F2) == 1.0
    assert det3(f_lambda(0.75)) == pytest.approx(0.25, abs=1e-15)


def test_det3_matches_permutation_expansion():
    rng = np.random.default_rng(3)
    perms = [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1), ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)]
    for _ in range(20):
        m = rng.uniform(-2, 2, (3, 3))
        leibniz = sum(s * m[0, p[0]] * m[1, p[1]] * m[2, p[2]] for p, s in perms)
        assert det3(m) == pytest.approx(leibniz, abs=1e-13)


def test_det3_batched():
    stack = np.stack([np.eye(3), F2, 2 * np.eye(3)])
    np.testing.assert_array_equal(det3(stack), [1.0, 1.0, 8.0])


def test_right_cauchy_green_examples():
    np.testing.assert_array_equal(right_cauchy_green(np.eye(3)), np.eye(3))
    c2 = right_cauchy_green(F2)
    np.testing.assert_array_equal(c2, np.eye(3))
    assert np.trace(c2) == 3.0
    c = right_cauchy_green(f_lambda(0.75))
    np.testing.assert_allclose(c, np.diag([0.25, 0.25, 1.0]), atol=1e-15)
    assert np.trace(c) == pytest.approx(1.5, abs=1e-15)


def test_cofactor_examples():
    np.testing.assert_array_equal(cofactor3(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(cofactor3(np.diag([2.0, 3.0, 4.0])), np.diag([12.0, 8.0, 6.0]))


def test_cofactor_adjugate_identity():
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = rng.uniform(-2, 2, (3, 3))
        d = det3(m)
        if abs(d) < 1e-3:
            continue
        np.testing.assert_allclose(m @ cofactor3(m).T / d, np.eye(3), atol=1e-12)


def test_det_along_rank_one_examples():
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert det_along_rank_one(np.eye(3), e1, e1) == (1.0, 1.0)
    assert det_along_rank_one(np.eye(3), e1, e2) == (1.0, 0.0)
    rng = np.random.default_rng(5)
    f, a, b = rng.normal(size=(3, 3)), rng.normal(size=3), rng.normal(size=3)
    c0, c1 = det_along_rank_one(f, a, b)
    assert c0 + 0.7 * c1 == pytest.approx(det3(f + 0.7 * np.outer(a, b)), abs=1e-10)


def test_as_mat3_rejects_non_finite_and_bad_shape():
    with pytest.raises(ValueError):
        as_mat3(np.full((3, 3), np.nan))
    with pytest.raises(ValueError):
        det3(np.array([[1.0, np.inf, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(ValueError):
        as_mat3(np.eye(2))
    np.testing.assert_array_equal(as_mat3(np.arange(9.0)), np.arange(9.0).reshape(3, 3))


@given(mats, mats)
def test_det_multiplicative(m, n):
    lhs = det3(m @ n)
    rhs = det3(m) * det3(n)
    scale = max(1.0, np.linalg.norm(m) ** 3 * np.linalg.norm(n) ** 3)
    assert abs(lhs - rhs) <= 1e-10 * scale


@given(mats)
def test_trace_c_is_frobenius_squared(f):
    assert np.trace(right_cauchy_green(f)) == pytest.approx(frobenius_sq(f), rel=1e-15, abs=1e-300)


@given(mats, vecs, vecs, st.lists(st.floats(-3, 3), min_size=5, max_size=5))
@settings(max_examples=50)
def test_det_affine_along_rank_one_lines(f, a, b, ss):
    c0, c1 = det_along_rank_one(f, a, b)
    for s in ss:
        direct = det3(f + s * np.outer(a, b))
        scale = max(1.0, (np.linalg.norm(f) + abs(s) * np.linalg.norm(a) * np.linalg.norm(b)) ** 3)
        assert abs(c0 + c1 * s - direct) <= 1e-10 * scale


def test_random_rotation_is_rotation():
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert is_rotation(random_rotation(rng))
    assert not is_rotation(np.diag([-1.0, 1.0, 1.0]))
    assert not is_rotation(2 * np.eye(3))
