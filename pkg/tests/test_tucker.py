import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuckerseg.tensor import matricize, multi_mode_product, random_orthonormal
from tuckerseg.tucker import (
    AlsConfig,
    TuckerFactors,
    core_of,
    fit_from_norms,
    relative_error,
    relative_residual,
    tucker_als,
    update_factor,
)


def low_rank(shape, ranks, seed=0):
    rng = np.random.default_rng(seed)
    core = rng.standard_normal(ranks)
    return multi_mode_product(core, [random_orthonormal(rng, d, r) for d, r in zip(shape, ranks)])


@pytest.mark.parametrize("shape,ranks", [((8, 6, 5), (2, 3, 2)), ((10, 4, 4, 3), (3, 2, 2, 2)), ((7, 9), (3, 3))])
def test_exact_recovery_of_low_rank(shape, ranks):
    x = low_rank(shape, ranks)
    f = tucker_als(x, AlsConfig(ranks, max_iters=50, tol=1e-12))
    assert relative_residual(x, f) <= 1e-6


def test_full_ranks_are_exact():
    x = np.random.default_rng(0).standard_normal((4, 3, 5))
    f = tucker_als(x, AlsConfig((4, 3, 5)))
    np.testing.assert_allclose(f.reconstruct(), x, atol=1e-10)


def test_ranks_are_clamped():
    f = tucker_als(np.ones((2, 3, 4)), AlsConfig((10, 10, 10)))
    assert f.ranks == (2, 3, 4)


def test_zero_tensor():
    f = tucker_als(np.zeros((3, 4, 2)), AlsConfig((2, 2, 2)))
    assert np.all(f.core == 0)
    assert f.orthonormality_error() <= 1e-12
    assert relative_residual(np.zeros((3, 4, 2)), f) == 0.0


def test_empty_tensor_rejected():
    with pytest.raises(ValueError):
        tucker_als(np.zeros((0, 3)), AlsConfig((1, 1)))


def test_config_validation():
    with pytest.raises(ValueError):
        AlsConfig((1, 0))
    with pytest.raises(ValueError):
        AlsConfig((1,), max_iters=0)
    with pytest.raises(ValueError):
        AlsConfig((1,), tol=0)


def test_factor_shape_validation():
    with pytest.raises(ValueError):
        TuckerFactors(np.zeros((2, 2)), [np.eye(2)])
    with pytest.raises(ValueError):
        TuckerFactors(np.zeros((2, 2)), [np.eye(2), np.eye(3)])


def test_update_factor_matches_direct_formula():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((5, 4, 6))
    us = [random_orthonormal(rng, d, 2) for d in x.shape]
    # mode 1: mat_1(x) (U0 kron U2) in row-major ordering
    z = matricize(x, 1) @ np.kron(us[0], us[2])
    u, _, _ = np.linalg.svd(z, full_matrices=False)
    got = update_factor(x, us, 1, 2)
    np.testing.assert_allclose(got @ got.T, u[:, :2] @ u[:, :2].T, atol=1e-10)


def test_core_of():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 4, 5))
    us = [random_orthonormal(rng, d, 2) for d in x.shape]
    np.testing.assert_allclose(core_of(x, us), multi_mode_product(x, [u.T for u in us]), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.integers(2, 6), min_size=2, max_size=4),
    st.integers(1, 3),
    st.integers(0, 1000),
)
def test_objective_non_increasing_and_orthonormal(shape, r, seed):
    x = np.random.default_rng(seed).standard_normal(shape)
    objs = []
    f = tucker_als(x, AlsConfig((r,) * len(shape), max_iters=15, tol=1e-12, seed=seed),
                   callback=lambda k, o: objs.append(o))
    assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))
    assert f.orthonormality_error() <= 1e-8
    # objective is the squared residual
    assert objs[-1] == pytest.approx(np.linalg.norm(x - f.reconstruct()) ** 2, rel=1e-8, abs=1e-9)


def test_convergence_stops_early():
    x = low_rank((6, 5, 4), (2, 2, 2))
    sweeps = []
    tucker_als(x, AlsConfig((2, 2, 2), max_iters=20, tol=0.01), callback=lambda k, o: sweeps.append(k))
    assert 2 <= len(sweeps) < 20


def test_max_iters_caps_sweeps():
    x = np.random.default_rng(0).standard_normal((6, 5, 4))
    sweeps = []
    tucker_als(x, AlsConfig((2, 2, 2), max_iters=3, tol=1e-15), callback=lambda k, o: sweeps.append(k))
    assert sweeps == [0, 1, 2]


def test_deterministic_given_seed():
    x = np.random.default_rng(0).standard_normal((6, 5, 4))
    a = tucker_als(x, AlsConfig((2, 2, 2), seed=7))
    b = tucker_als(x, AlsConfig((2, 2, 2), seed=7))
    assert np.array_equal(a.core, b.core)
    assert all(np.array_equal(u, v) for u, v in zip(a.factors, b.factors))


def test_fit_from_norms():
    assert fit_from_norms(4.0, 3.0) == (1.0, 0.5)
    assert fit_from_norms(0.0, 0.0) == (0.0, 1.0)
    # round-off can make the core norm exceed the data norm slightly
    assert fit_from_norms(1.0, 1.0 + 1e-16)[0] == 0.0


def test_relative_error_cases():
    x = np.zeros((4, 3, 3))
    exact = tucker_als(x, AlsConfig((1, 1, 1)))
    off = TuckerFactors(np.ones((1, 1, 1)), exact.factors)
    assert relative_error(x, exact, exact) == 0.0
    assert relative_error(x, off, exact) == math.inf
    noisy = low_rank((4, 3, 3), (1, 1, 1)) + 0.1 * np.random.default_rng(1).standard_normal(x.shape)
    ref = tucker_als(noisy, AlsConfig((1, 1, 1)))
    assert relative_error(noisy, ref, ref) == 0.0
    assert relative_error(noisy, TuckerFactors(np.zeros((1, 1, 1)), ref.factors), ref) > 0
