import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from speccov.matcore import (
    commutation,
    inner_weighted,
    is_positive_definite,
    kron,
    mat,
    psd_sqrt,
    symmetriser,
    vec,
)

finite_floats = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)


def square(d, seed):
    return np.random.default_rng(seed).standard_normal((d, d))


def test_vec_column_stacking():
    assert vec(np.array([[1.0, 2.0], [3.0, 4.0]])).tolist() == [1.0, 3.0, 2.0, 4.0]


def test_vec_identity_2():
    assert vec(np.eye(2)).tolist() == [1.0, 0.0, 0.0, 1.0]


def test_mat_vec_round_trip_3x3():
    m = square(3, 0)
    assert np.array_equal(mat(vec(m), 3), m)


@given(arrays(float, (4, 4), elements=finite_floats))
def test_vec_mat_inverse_pair(m):
    assert np.array_equal(mat(vec(m)), m)
    v = m.flatten()
    assert np.array_equal(vec(mat(v, 4)), v)


def test_vec_rejects_non_matrix():
    with pytest.raises(ValueError):
        vec(np.zeros(3))
    with pytest.raises(ValueError):
        mat(np.zeros(5))


def test_kron_identities():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])), np.diag([3.0, 4.0, 6.0, 8.0]))


def test_kron_vec_identity_random():
    rng = np.random.default_rng(7)
    for _ in range(5):
        a, b, c = (rng.standard_normal((2, 2)) for _ in range(3))
        lhs = vec(a @ b @ c)
        rhs = kron(c.T, a) @ vec(b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_kron_mixed_product_and_associativity():
    rng = np.random.default_rng(8)
    a = rng.standard_normal((2, 3))
    b = rng.standard_normal((2, 2))
    c = rng.standard_normal((3, 2))
    d = rng.standard_normal((2, 3))
    np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)
    e = rng.standard_normal((2, 2))
    np.testing.assert_allclose(kron(kron(a, b), e), kron(a, kron(b, e)), atol=1e-12)


def test_symmetriser_d1():
    assert symmetriser(1).tolist() == [[2.0]]


def test_symmetriser_action_d2():
    z = symmetriser(2)
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert (z @ vec(a)).tolist() == [2.0, 5.0, 5.0, 8.0]


@given(arrays(float, (3, 3), elements=finite_floats))
def test_symmetriser_action_is_transpose_sum(a):
    z = symmetriser(3)
    np.testing.assert_allclose(z @ vec(a), vec(a + a.T), atol=1e-9)


def test_symmetriser_doubles_symmetric_inputs():
    rng = np.random.default_rng(3)
    for d in (2, 3, 4):
        h = rng.standard_normal((d, d))
        h = h + h.T
        assert np.array_equal(symmetriser(d) @ vec(h), 2.0 * vec(h))


def test_symmetriser_psd_and_singular():
    for d in (2, 3):
        z = symmetriser(d)
        w = np.linalg.eigvalsh(z)
        assert w[0] > -1e-12
        assert np.min(np.abs(w)) < 1e-12  # singular for d >= 2


def test_symmetriser_commutes_with_kron_squares():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 3))
    z = symmetriser(3)
    aa = kron(a, a)
    np.testing.assert_allclose(aa @ z, z @ aa, atol=1e-12)


def test_symmetriser_is_wishart_covariance_mc():
    # Z == Cov(vec(XX^T)) for X standard normal; Monte Carlo oracle
    rng = np.random.default_rng(20250810)
    n = 10**6
    x = rng.standard_normal((n, 2))
    outer = np.einsum("ni,nj->nij", x, x).reshape(n, 4)
    emp = np.cov(outer, rowvar=False)
    np.testing.assert_allclose(emp, symmetriser(2), atol=0.02)


def test_commutation_transposes():
    a = square(3, 5)
    np.testing.assert_allclose(commutation(3) @ vec(a), vec(a.T), atol=0)


def test_psd_sqrt_diagonal_and_identity():
    np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    np.testing.assert_allclose(psd_sqrt(np.eye(3)), np.eye(3), atol=0)


def test_psd_sqrt_multiply_back_random_psd():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((4, 4))
    s = a @ a.T
    r = psd_sqrt(s)
    assert np.linalg.norm(r @ r - s) / np.linalg.norm(s) < 1e-10
    np.testing.assert_allclose(r, r.T, atol=0)
    assert np.linalg.eigvalsh(r)[0] >= -1e-12


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        psd_sqrt(np.diag([1.0, -1.0]))


def test_inner_weighted_examples():
    assert inner_weighted(np.eye(2), np.eye(2), np.eye(4)) == 2.0
    assert inner_weighted(np.eye(2), np.eye(2), symmetriser(2)) == 4.0


def test_inner_weighted_symmetry_and_psd():
    rng = np.random.default_rng(12)
    a, b = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    c = rng.standard_normal((4, 4))
    c = c @ c.T
    assert inner_weighted(a, b, c) == pytest.approx(inner_weighted(b, a, c), rel=1e-12)
    assert inner_weighted(a, a, c) >= 0.0


def test_inner_weighted_shape_mismatch():
    with pytest.raises(ValueError):
        inner_weighted(np.eye(2), np.eye(2), np.eye(3))


def test_is_positive_definite():
    assert is_positive_definite(np.eye(2))
    assert not is_positive_definite(np.diag([1.0, 0.0]))
