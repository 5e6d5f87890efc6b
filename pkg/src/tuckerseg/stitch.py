"""Stitching Tucker decompositions of temporally adjacent subtensors.

Given decompositions ``Y_1, ..., Y_s`` of consecutive blocks, ALS is run on
their temporal concatenation without ever forming it: every unfolding ALS
needs is assembled from the small per-block cores and factor products.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import _fix_signs, complete_basis, fold, matricize, multi_mode_product
from .tucker import (
    AlsConfig,
    TuckerFactors,
    _update_from_unfolding,
    clamp_ranks,
    fit_from_norms,
    initial_factors,
)


def block_offsets(parts: Sequence[TuckerFactors]) -> np.ndarray:
    """Row offsets ``t_0 = 0, t_i = t_{i-1} + len_i`` of each block in the concatenation."""
    return np.concatenate([[0], np.cumsum([f.shape[0] for f in parts])]).astype(int)


def _check_parts(parts: Sequence[TuckerFactors]) -> tuple[int, ...]:
    if not parts:
        raise ValueError("need at least one decomposition to stitch")
    tail = parts[0].shape[1:]
    for k, f in enumerate(parts):
        if f.shape[1:] != tail:
            raise ValueError(f"part {k} has non-temporal shape {f.shape[1:]}, expected {tail}")
    return (int(sum(f.shape[0] for f in parts)),) + tail


def _temporal_blocks(parts, factors):
    # mat_0(H_i x_m (U_m.T V_im) for m >= 1), one small matrix per block
    return [
        matricize(multi_mode_product(
            f.core, [None] + [factors[m].T @ f.factors[m] for m in range(1, f.ndim)]
        ), 0)
        for f in parts
    ]


def temporal_unfolding(parts: Sequence[TuckerFactors], factors: Sequence[np.ndarray | None]) -> np.ndarray:
    """Mode-0 unfolding of ``Y x_1 U1.T ... x_{p-1} U{p-1}.T`` for the stacked blocks.

    Block ``i`` contributes the rows ``V_i0 @ mat_0(H_i x_m (U_m.T V_im) for m >= 1)``.
    ``factors[0]`` is ignored.
    """
    blocks = _temporal_blocks(parts, factors)
    return np.vstack([f.factors[0] @ m for f, m in zip(parts, blocks)])


def temporal_factor_update(
    parts: Sequence[TuckerFactors], factors: Sequence[np.ndarray | None], rank: int
) -> np.ndarray:
    """Leading ``rank`` left singular vectors of :func:`temporal_unfolding`.

    The unfolding equals ``blockdiag(V_i0) @ vstack(M_i)`` and the block
    diagonal part has orthonormal columns, so its left singular vectors are
    ``blockdiag(V_i0)`` times those of the short stacked matrix. This avoids an
    SVD with one row per time step.
    """
    blocks = _temporal_blocks(parts, factors)
    stacked = np.vstack(blocks)
    inner = _update_from_unfolding(stacked, min(rank, stacked.shape[0]))
    rows, k = [], 0
    for f, m in zip(parts, blocks):
        rows.append(f.factors[0] @ inner[k:k + m.shape[0]])
        k += m.shape[0]
    u = np.vstack(rows)
    return np.ascontiguousarray(complete_basis(u * _fix_signs(u), rank))


def nontemporal_unfolding(
    parts: Sequence[TuckerFactors], factors: Sequence[np.ndarray], n: int
) -> np.ndarray:
    """Mode-``n`` unfolding (``n >= 1``) of the stacked blocks projected on all other modes.

    The temporal factor is split by block rows, so block ``i`` uses
    ``U0[t_{i-1}:t_i].T @ V_i0`` on mode 0.
    """
    if n < 1:
        raise ValueError("use temporal_unfolding for mode 0")
    offsets = block_offsets(parts)
    total = None
    for i, f in enumerate(parts):
        mats = [factors[0][offsets[i]:offsets[i + 1]].T @ f.factors[0]]
        mats += [None if m == n else factors[m].T @ f.factors[m] for m in range(1, f.ndim)]
        term = f.factors[n] @ matricize(multi_mode_product(f.core, mats), n)
        total = term if total is None else total + term
    return total


def _pad(f: TuckerFactors, ranks: Sequence[int]) -> TuckerFactors:
    """Grow ``f`` to the given ranks with zero core entries and completed bases."""
    if f.ranks == tuple(ranks):
        return f
    core = np.zeros(ranks)
    core[tuple(slice(0, k) for k in f.ranks)] = f.core
    return TuckerFactors(core, [complete_basis(u, r) for u, r in zip(f.factors, ranks)])


def stitch(
    parts: Sequence[TuckerFactors],
    cfg: AlsConfig,
    callback: Callable[[int, float], None] | None = None,
) -> TuckerFactors:
    """Tucker decomposition of the temporal concatenation of ``parts``.

    Parts must be ordered by time and have orthonormal factors. Target ranks come
    from ``cfg.ranks``, clamped to the stacked shape. Convergence follows
    :func:`tuckerseg.tucker.tucker_als`, with the fit measured against the
    stacked decompositions.
    """
    shape = _check_parts(parts)
    ranks = clamp_ranks(cfg.ranks, shape)
    if len(parts) == 1 and all(k <= r for k, r in zip(parts[0].ranks, ranks)):
        # A single block already within the target ranks is its own optimum.
        return _pad(parts[0], ranks)

    p = len(shape)
    factors = initial_factors(shape, ranks, cfg.seed)
    norm_sq = float(sum(f.norm() ** 2 for f in parts))
    if norm_sq == 0:
        return TuckerFactors(np.zeros(ranks), factors)

    prev_fit = None
    core = None
    for sweep in range(cfg.max_iters):
        factors[0] = temporal_factor_update(parts, factors, ranks[0])
        for n in range(1, p):
            z = nontemporal_unfolding(parts, factors, n)
            factors[n] = _update_from_unfolding(z, ranks[n])
        # z is the last mode's unfolding; projecting it gives the core directly.
        core = fold(factors[p - 1].T @ z, p - 1, ranks)

        obj, fit = fit_from_norms(norm_sq, float(np.sum(core**2)))
        if callback is not None:
            callback(sweep, obj)
        if prev_fit is not None and abs(fit - prev_fit) < cfg.tol:
            break
        prev_fit = fit
    return TuckerFactors(core, factors)
