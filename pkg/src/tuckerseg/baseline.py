"""Comparators for range queries: from-scratch ALS and fixed-size blocks.

Also generates approximately low-rank synthetic streams ``x = w + e`` with a
known noise fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .query import partial_hit_factors
from .stitch import stitch
from .tensor import as_tensor, frobenius_norm, random_orthonormal
from .tree import log2_ceil
from .tucker import AlsConfig, TuckerFactors, reconstruct, tucker_als


def _check_range(T: int, start: int, stop: int) -> None:
    if not 0 <= start < stop <= T:
        raise ValueError(f"range [{start},{stop}) is not a nonempty subrange of [0,{T})")


def brute_force_range(x: np.ndarray, start: int, stop: int, cfg: AlsConfig) -> TuckerFactors:
    """ALS from scratch on ``x[start:stop]``; the reference for relative errors."""
    _check_range(x.shape[0], start, stop)
    return tucker_als(as_tensor(x[start:stop]), cfg)


def default_block_size(T: int) -> int:
    """``T / (2 ceil(log2 T))`` rounded down, at least 1."""
    if T < 2:
        return 1
    return max(1, T // (2 * log2_ceil(T)))


@dataclass
class BlockIndex:
    block_size: int
    timespan: int
    blocks: list[TuckerFactors] = field(repr=False)

    def block_range(self, k: int) -> tuple[int, int]:
        return k * self.block_size, min((k + 1) * self.block_size, self.timespan)


def build_blocks(x: np.ndarray, block_size: int | None, cfg: AlsConfig) -> BlockIndex:
    x = as_tensor(x)
    T = x.shape[0]
    b = default_block_size(T) if block_size is None else int(block_size)
    if b <= 0:
        raise ValueError("block size must be positive")
    b = min(b, T)
    blocks = [tucker_als(x[lo:lo + b], cfg) for lo in range(0, T, b)]
    return BlockIndex(b, T, blocks)


def block_parts(index: BlockIndex, start: int, stop: int) -> list[TuckerFactors]:
    """Decompositions of the blocks covering ``[start, stop)``, boundary blocks trimmed."""
    _check_range(index.timespan, start, stop)
    parts = []
    for k in range(start // index.block_size, (stop - 1) // index.block_size + 1):
        lo, hi = index.block_range(k)
        a, b = max(start, lo), min(stop, hi)
        f = index.blocks[k]
        parts.append(f if (a, b) == (lo, hi) else partial_hit_factors(f, a - lo, b - lo))
    return parts


def block_range_query(index: BlockIndex, start: int, stop: int, cfg: AlsConfig) -> TuckerFactors:
    return stitch(block_parts(index, start, stop), cfg)


@dataclass(frozen=True)
class SynthSpec:
    shape: tuple[int, ...]
    ranks: tuple[int, ...]
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if len(self.shape) < 2 or len(self.ranks) != len(self.shape):
            raise ValueError("need at least two modes and one rank per mode")
        if any(not 1 <= r <= d for r, d in zip(self.ranks, self.shape)):
            raise ValueError(f"ranks {self.ranks} must lie in [1, dims {self.shape}]")
        if not 0 <= self.noise < 1:
            raise ValueError("noise fraction must lie in [0, 1)")


def generate_synthetic(spec: SynthSpec) -> np.ndarray:
    """Low-rank tensor plus Gaussian noise making up ``spec.noise`` of the total norm.

    The signal is a random Tucker tensor: normal core and orthonormalized normal
    factors at ``spec.ranks``. The noise scale ``c`` solves
    ``||c n|| = noise * ||w + c n||`` exactly.
    """
    rng = np.random.default_rng(spec.seed)
    factors = [random_orthonormal(rng, d, r) for d, r in zip(spec.shape, spec.ranks)]
    core = rng.standard_normal(spec.ranks)
    w = reconstruct(TuckerFactors(core, factors))
    # Scale so a typical entry is O(1) regardless of shape.
    w *= math.sqrt(w.size) / frobenius_norm(w)
    if spec.noise == 0:
        return w
    n = rng.standard_normal(spec.shape)
    eps2 = spec.noise**2
    nn, wn, ww = float(np.sum(n * n)), float(np.sum(w * n)), float(np.sum(w * w))
    # c^2 nn (1 - eps^2) - 2 eps^2 wn c - eps^2 ww = 0, positive root
    a, b, c0 = nn * (1 - eps2), -2 * eps2 * wn, -eps2 * ww
    c = (-b + math.sqrt(b * b - 4 * a * c0)) / (2 * a)
    return as_tensor(w + c * n)
