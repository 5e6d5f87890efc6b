"""Tucker decomposition by alternating least squares (HOOI)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import (
    as_tensor,
    complete_basis,
    frobenius_norm,
    leading_left_singular_vectors,
    matricize,
    mode_product,
    multi_mode_product,
    orthonormality_error,
    random_orthonormal,
)


@dataclass
class TuckerFactors:
    """Core tensor plus one column-orthonormal factor matrix per mode.

    The represented tensor is ``core x_0 factors[0] x_1 factors[1] ...``; it is
    never formed unless :meth:`reconstruct` is called.
    """

    core: np.ndarray
    factors: list[np.ndarray]

    def __post_init__(self):
        self.core = as_tensor(self.core)
        self.factors = [as_tensor(u) for u in self.factors]
        if self.core.ndim != len(self.factors):
            raise ValueError(
                f"core has {self.core.ndim} modes but {len(self.factors)} factors given"
            )
        for n, u in enumerate(self.factors):
            if u.ndim != 2 or u.shape[1] != self.core.shape[n]:
                raise ValueError(
                    f"factor {n} has shape {u.shape}, core extent is {self.core.shape[n]}"
                )

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of the represented tensor."""
        return tuple(u.shape[0] for u in self.factors)

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.core.shape

    @property
    def ndim(self) -> int:
        return self.core.ndim

    def reconstruct(self) -> np.ndarray:
        return reconstruct(self)

    def orthonormality_error(self) -> float:
        return max(orthonormality_error(u) for u in self.factors)

    def norm(self) -> float:
        """Frobenius norm of the represented tensor (valid for orthonormal factors)."""
        return frobenius_norm(self.core)


@dataclass(frozen=True)
class AlsConfig:
    ranks: tuple[int, ...] = field(default=())
    max_iters: int = 20
    tol: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if any(r < 1 for r in self.ranks):
            raise ValueError(f"ranks must be positive, got {self.ranks}")


def clamp_ranks(ranks: Sequence[int], shape: Sequence[int]) -> tuple[int, ...]:
    if len(ranks) != len(shape):
        raise ValueError(f"{len(ranks)} ranks given for a {len(shape)}-way tensor")
    return tuple(min(int(r), int(d)) for r, d in zip(ranks, shape))


def _projection_order(shape, factors, skip):
    # Shrink the largest modes first so later products touch less data.
    modes = [m for m in range(len(shape)) if m != skip]
    return sorted(modes, key=lambda m: factors[m].shape[1] / max(shape[m], 1))


def project_except(x: np.ndarray, factors: Sequence[np.ndarray], n: int | None) -> np.ndarray:
    """``x`` multiplied by ``factors[m].T`` along every mode ``m != n``."""
    out = x
    for m in _projection_order(x.shape, factors, n):
        out = mode_product(out, factors[m].T, m)
    return out


def _check_factors(x: np.ndarray, factors: Sequence[np.ndarray]) -> None:
    if len(factors) != x.ndim:
        raise ValueError(f"expected {x.ndim} factors, got {len(factors)}")
    for m, u in enumerate(factors):
        if u is not None and (u.ndim != 2 or u.shape[0] != x.shape[m]):
            raise ValueError(f"factor {m} has shape {np.shape(u)}, mode extent is {x.shape[m]}")


def _update_from_unfolding(z: np.ndarray, rank: int) -> np.ndarray:
    u = leading_left_singular_vectors(z, rank)
    return complete_basis(u, rank)


def update_factor(x: np.ndarray, factors: Sequence[np.ndarray], n: int, rank: int | None = None) -> np.ndarray:
    """One ALS step: leading left singular vectors of the projected mode-``n`` unfolding."""
    x = as_tensor(x)
    _check_factors(x, factors)
    if rank is None:
        rank = factors[n].shape[1]
    z = matricize(project_except(x, factors, n), n)
    return _update_from_unfolding(z, rank)


def core_of(x: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    """Optimal core for fixed orthonormal factors: ``x x_0 U0.T ... x_{p-1} U{p-1}.T``."""
    x = as_tensor(x)
    _check_factors(x, factors)
    return project_except(x, factors, None)


def reconstruct(f: TuckerFactors) -> np.ndarray:
    return as_tensor(multi_mode_product(f.core, f.factors))


def initial_factors(shape: Sequence[int], ranks: Sequence[int], seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [random_orthonormal(rng, d, r) for d, r in zip(shape, ranks)]


def fit_from_norms(norm_sq: float, core_norm_sq: float) -> tuple[float, float]:
    """Return ``(objective, fit)`` given the data and core squared norms.

    With orthonormal factors the squared residual equals ``||x||^2 - ||core||^2``.
    """
    obj = max(norm_sq - core_norm_sq, 0.0)
    if norm_sq == 0:
        return obj, 1.0
    return obj, 1.0 - math.sqrt(obj / norm_sq)


def tucker_als(
    x: np.ndarray,
    cfg: AlsConfig,
    callback: Callable[[int, float], None] | None = None,
) -> TuckerFactors:
    """Tucker decomposition of ``x`` by alternating least squares.

    Factors start from seeded random orthonormal matrices. Each sweep updates
    every mode in order and recomputes the core. Iteration stops after
    ``cfg.max_iters`` sweeps, or once the fit ``1 - ||x - y|| / ||x||`` changes by
    less than ``cfg.tol`` between consecutive sweeps.

    ``callback(sweep, objective)`` is called after each sweep with the squared
    reconstruction error.
    """
    x = as_tensor(x)
    if x.size == 0:
        raise ValueError("cannot decompose an empty tensor")
    ranks = clamp_ranks(cfg.ranks, x.shape)
    factors = initial_factors(x.shape, ranks, cfg.seed)
    norm_sq = frobenius_norm(x) ** 2
    if norm_sq == 0:
        return TuckerFactors(np.zeros(ranks), factors)

    last = x.ndim - 1
    prev_fit = None
    for sweep in range(cfg.max_iters):
        for n in range(last):
            factors[n] = update_factor(x, factors, n, ranks[n])
        y = project_except(x, factors, last)
        factors[last] = _update_from_unfolding(matricize(y, last), ranks[last])
        core = mode_product(y, factors[last].T, last)

        obj, fit = fit_from_norms(norm_sq, frobenius_norm(core) ** 2)
        if callback is not None:
            callback(sweep, obj)
        if prev_fit is not None and abs(fit - prev_fit) < cfg.tol:
            break
        prev_fit = fit
    return TuckerFactors(core, factors)


def residual_norm(x: np.ndarray, f: TuckerFactors) -> float:
    x = as_tensor(x)
    if x.shape != f.shape:
        raise ValueError(f"tensor shape {x.shape} does not match decomposition shape {f.shape}")
    return frobenius_norm(x - reconstruct(f))


def relative_residual(x: np.ndarray, f: TuckerFactors) -> float:
    """``||x - y|| / ||x||`` (0 for a zero tensor reconstructed exactly)."""
    num = residual_norm(x, f)
    den = frobenius_norm(x)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def relative_error(x: np.ndarray, candidate: TuckerFactors, reference: TuckerFactors) -> float:
    """Excess residual of ``candidate`` over ``reference``: ``||x-y_c|| / ||x-y_r|| - 1``.

    Returns 0 when both residuals vanish and ``inf`` when only the reference does.
    """
    num = residual_norm(x, candidate)
    den = residual_norm(x, reference)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den - 1.0
