"""Dense tensor primitives.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 in C (row-major)
order, with the temporal mode on axis 0. Modes are numbered from 0, matching
numpy axes.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def as_tensor(x) -> np.ndarray:
    """Return ``x`` as a C-contiguous float64 array."""
    return np.ascontiguousarray(x, dtype=np.float64)


def _check_mode(x: np.ndarray, n: int) -> None:
    if not 0 <= n < x.ndim:
        raise ValueError(f"mode {n} out of range for a {x.ndim}-way tensor")


def vectorize(x: np.ndarray) -> np.ndarray:
    """Flatten ``x`` so entry ``(i_1, ..., i_p)`` lands at ``sum_n i_n * prod_{m>n} D_m``."""
    return as_tensor(x).reshape(-1)


def matricize(x: np.ndarray, n: int) -> np.ndarray:
    """Mode-``n`` unfolding: row ``i`` is the vectorized mode-``n`` slice at index ``i``."""
    x = as_tensor(x)
    _check_mode(x, n)
    return np.moveaxis(x, n, 0).reshape(x.shape[n], -1)


def fold(m: np.ndarray, n: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`matricize` for a tensor of the given ``shape``."""
    shape = tuple(shape)
    moved = (shape[n],) + shape[:n] + shape[n + 1:]
    return np.ascontiguousarray(np.moveaxis(np.reshape(m, moved), 0, n))


def mode_product(g: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """Mode-``n`` product ``g x_n u``; mode ``n`` of the result has ``u.shape[0]`` entries."""
    g = np.asarray(g, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    _check_mode(g, n)
    if u.ndim != 2 or u.shape[1] != g.shape[n]:
        raise ValueError(
            f"cannot multiply mode {n} of extent {g.shape[n]} by a matrix of shape {u.shape}"
        )
    out = np.tensordot(u, g, axes=(1, n))
    return np.ascontiguousarray(np.moveaxis(out, 0, n))


def multi_mode_product(g: np.ndarray, mats: Sequence[np.ndarray | None]) -> np.ndarray:
    """Apply ``g x_0 mats[0] x_1 mats[1] ...``, skipping ``None`` entries."""
    if len(mats) != np.ndim(g):
        raise ValueError(f"expected {np.ndim(g)} matrices, got {len(mats)}")
    out = np.asarray(g, dtype=np.float64)
    for n, u in enumerate(mats):
        if u is not None:
            out = mode_product(out, u, n)
    return out


def frobenius_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(x)))


def concat_temporal(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate tensors along the temporal mode (axis 0)."""
    if not parts:
        raise ValueError("nothing to concatenate")
    tail = np.shape(parts[0])[1:]
    for k, part in enumerate(parts):
        if np.shape(part)[1:] != tail:
            raise ValueError(
                f"part {k} has non-temporal shape {np.shape(part)[1:]}, expected {tail}"
            )
    return as_tensor(np.concatenate(parts, axis=0))


def split_temporal(x: np.ndarray, lengths: Sequence[int]) -> list[np.ndarray]:
    """Split ``x`` along the temporal mode into consecutive pieces of the given lengths."""
    if sum(lengths) != x.shape[0]:
        raise ValueError(f"lengths sum to {sum(lengths)}, tensor has {x.shape[0]} slices")
    cuts = np.cumsum(lengths)[:-1]
    return [as_tensor(p) for p in np.split(x, cuts, axis=0)]


def _fix_signs(q: np.ndarray) -> np.ndarray:
    """Per-column signs making each column's largest-magnitude entry nonnegative.

    ``argmax`` returns the first maximum, so ties go to the lowest row index.
    """
    if q.size == 0:
        return np.ones(q.shape[1])
    idx = np.argmax(np.abs(q), axis=0)
    pivots = q[idx, np.arange(q.shape[1])]
    return np.where(pivots < 0, -1.0, 1.0)


def thin_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with a deterministic sign convention on the columns of ``q``."""
    a = np.asarray(a, dtype=np.float64)
    q, r = np.linalg.qr(a, mode="reduced")
    s = _fix_signs(q)
    return q * s, r * s[:, None]


def leading_left_singular_vectors(a: np.ndarray, r: int) -> np.ndarray:
    """Orthonormal basis of the top-``r`` left singular subspace of ``a``.

    Returns ``min(r, m, k)`` columns with the same sign convention as :func:`thin_qr`.
    """
    if r < 1:
        raise ValueError("r must be positive")
    a = np.asarray(a, dtype=np.float64)
    u, _, _ = np.linalg.svd(a, full_matrices=False)
    u = u[:, : min(r, u.shape[1])]
    return np.ascontiguousarray(u * _fix_signs(u))


def complete_basis(u: np.ndarray, k: int) -> np.ndarray:
    """Extend the orthonormal columns of ``u`` to ``k`` columns.

    Added columns span part of the orthogonal complement of ``range(u)`` and are
    chosen deterministically (from coordinate axes).
    """
    m, have = u.shape
    if have >= k:
        return u
    if k > m:
        raise ValueError(f"cannot fit {k} orthonormal columns in dimension {m}")
    # Project the identity onto the complement, then take its dominant directions.
    resid = np.eye(m) - u @ u.T
    extra = leading_left_singular_vectors(resid, k - have)
    return np.ascontiguousarray(np.hstack([u, extra]))


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def orthonormality_error(u: np.ndarray) -> float:
    """Max-abs deviation of ``u.T @ u`` from the identity."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(u.T @ u - np.eye(u.shape[1]))))


def random_orthonormal(rng: np.random.Generator, m: int, k: int) -> np.ndarray:
    """An ``m x k`` column-orthonormal matrix from a seeded normal draw."""
    q, _ = thin_qr(rng.standard_normal((m, k)))
    return q
