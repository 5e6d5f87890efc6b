import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuckerseg.tensor import (
    complete_basis,
    concat_temporal,
    fold,
    frobenius_norm,
    kronecker,
    leading_left_singular_vectors,
    matricize,
    mode_product,
    multi_mode_product,
    orthonormality_error,
    random_orthonormal,
    split_temporal,
    thin_qr,
    vectorize,
)

shapes = st.lists(st.integers(1, 4), min_size=1, max_size=4).map(tuple)


def _rand(shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


@given(shapes)
def test_vectorize_index_formula(shape):
    x = np.arange(int(np.prod(shape)), dtype=float).reshape(shape) * 1.5
    v = vectorize(x)
    for idx in itertools.product(*map(range, shape)):
        j = sum(i * int(np.prod(shape[n + 1:])) for n, i in enumerate(idx))
        assert v[j] == x[idx]


def test_vectorize_example():
    x = np.zeros((2, 3, 4))
    x[1, 2, 3] = 7.0
    assert np.flatnonzero(vectorize(x)).tolist() == [23]


def test_matricize_examples():
    x = np.arange(24.0).reshape(2, 3, 4)
    m0 = matricize(x, 0)
    assert m0.shape == (2, 12)
    assert np.array_equal(m0[1], np.arange(12.0, 24.0))
    m1 = matricize(x, 1)
    assert m1.shape == (3, 8)
    assert np.array_equal(m1[2], x[:, 2, :].ravel())
    assert matricize(x, 2).shape == (4, 6)
    with pytest.raises(ValueError):
        matricize(x, 3)


@given(shapes, st.data())
def test_fold_inverts_matricize(shape, data):
    n = data.draw(st.integers(0, len(shape) - 1))
    x = _rand(shape)
    assert np.array_equal(fold(matricize(x, n), n, shape), x)


@given(shapes, st.data())
def test_mode_product_matches_unfolding(shape, data):
    n = data.draw(st.integers(0, len(shape) - 1))
    k = data.draw(st.integers(1, 4))
    x, u = _rand(shape, 1), _rand((k, shape[n]), 2)
    y = mode_product(x, u, n)
    assert y.shape == shape[:n] + (k,) + shape[n + 1:]
    np.testing.assert_allclose(matricize(y, n), u @ matricize(x, n), atol=1e-12)


def test_mode_product_rejects_bad_shape():
    with pytest.raises(ValueError):
        mode_product(np.zeros((2, 3)), np.zeros((4, 2)), 1)


@given(shapes, st.data())
def test_reverse_associativity(shape, data):
    n = data.draw(st.integers(0, len(shape) - 1))
    a = _rand((3, shape[n]), 3)
    b = _rand((2, 3), 4)
    x = _rand(shape)
    lhs = mode_product(mode_product(x, a, n), b, n)
    np.testing.assert_allclose(lhs, mode_product(x, b @ a, n), atol=1e-12)


@given(st.lists(st.integers(1, 4), min_size=2, max_size=4).map(tuple))
def test_distinct_modes_commute(shape):
    a, b = _rand((2, shape[0]), 5), _rand((3, shape[1]), 6)
    x = _rand(shape)
    np.testing.assert_allclose(
        mode_product(mode_product(x, a, 0), b, 1),
        mode_product(mode_product(x, b, 1), a, 0),
        atol=1e-12,
    )


def test_multi_mode_product_kronecker_identity():
    # mat_0(g x_1 B x_2 C) == mat_0(g) (B kron C).T in row-major order
    g = _rand((2, 3, 4))
    b, c = _rand((5, 3), 1), _rand((6, 4), 2)
    y = multi_mode_product(g, [None, b, c])
    np.testing.assert_allclose(matricize(y, 0), matricize(g, 0) @ kronecker(b, c).T, atol=1e-12)


def test_kronecker_mixed_product():
    a, b, c, d = (_rand(s, k) for k, s in enumerate([(2, 3), (4, 2), (3, 2), (2, 5)]))
    np.testing.assert_allclose(kronecker(a, b) @ kronecker(c, d), kronecker(a @ c, b @ d), atol=1e-12)


@given(shapes)
def test_norm_matches_vector_norm(shape):
    x = _rand(shape)
    assert frobenius_norm(x) == pytest.approx(float(np.sqrt(np.sum(x * x))))


def test_concat_split_roundtrip():
    parts = [_rand((n, 3, 2), n) for n in (1, 4, 2)]
    x = concat_temporal(parts)
    assert x.shape == (7, 3, 2)
    for a, b in zip(split_temporal(x, [1, 4, 2]), parts):
        assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        concat_temporal([np.zeros((1, 3, 2)), np.zeros((1, 2, 3))])
    with pytest.raises(ValueError):
        split_temporal(x, [1, 1])


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 100))
def test_thin_qr(m, k, seed):
    a = _rand((m, k), seed)
    q, r = thin_qr(a)
    np.testing.assert_allclose(q @ r, a, atol=1e-12)
    assert orthonormality_error(q) <= 1e-12
    assert np.allclose(np.tril(r, -1), 0)
    # sign convention: largest-magnitude entry of each column is nonnegative
    assert np.all(q[np.argmax(np.abs(q), axis=0), np.arange(q.shape[1])] >= 0)


@settings(max_examples=50)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 9), st.integers(0, 100))
def test_leading_singular_vectors(m, k, r, seed):
    a = _rand((m, k), seed)
    u = leading_left_singular_vectors(a, r)
    assert u.shape == (m, min(r, m, k))
    assert orthonormality_error(u) <= 1e-12
    s = np.linalg.svd(a, compute_uv=False)
    # best rank-r residual is attained by projecting onto u
    resid = np.linalg.norm(a - u @ (u.T @ a))
    assert resid == pytest.approx(np.sqrt(np.sum(s[u.shape[1]:] ** 2)), abs=1e-10)


def test_leading_singular_vectors_deterministic():
    a = _rand((6, 4))
    assert np.array_equal(leading_left_singular_vectors(a, 3), leading_left_singular_vectors(a.copy(), 3))


@given(st.integers(1, 8), st.data())
def test_complete_basis(m, data):
    have = data.draw(st.integers(0, m))
    k = data.draw(st.integers(have, m))
    u = random_orthonormal(np.random.default_rng(m), m, have)
    w = complete_basis(u, k)
    assert w.shape == (m, k)
    assert np.array_equal(w[:, :have], u)
    assert orthonormality_error(w) <= 1e-12


def test_complete_basis_too_many_columns():
    with pytest.raises(ValueError):
        complete_basis(np.eye(3)[:, :1], 4)
