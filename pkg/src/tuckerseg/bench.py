"""Latency / accuracy benchmark of range queries on synthetic streams."""

from __future__ import annotations

import csv
import dataclasses
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .baseline import SynthSpec, block_parts, brute_force_range, build_blocks, generate_synthetic
from .query import collect_parts, hit_counts
from .stitch import stitch
from .tree import StreamSegmentTree
from .tucker import AlsConfig, relative_error

HEADER = ["op", "L", "T", "method", "seconds", "rel_error", "hits_entire", "hits_partial", "stitches"]
METHODS = ("sst", "block", "brute")


@dataclass
class BenchRow:
    op: str
    L: int
    T: int
    method: str
    seconds: float
    rel_error: float | None = None
    hits_entire: int | None = None
    hits_partial: int | None = None
    stitches: int | None = None

    def as_list(self) -> list:
        return ["" if v is None else v for v in dataclasses.astuple(self)]


def timed(fn: Callable, reps: int):
    """Run ``fn`` ``reps`` times; return its last result and the median wall time."""
    times = []
    out = None
    for _ in range(max(1, reps)):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def query_starts(T: int, L: int, count: int, seed: int = 0) -> list[int]:
    """Up to ``count`` distinct seeded random start offsets for length-``L`` queries.

    Evenly spaced offsets tend to align with node boundaries when ``T`` and
    ``L`` are powers of two, which would flatter the tree.
    """
    n = T - L + 1
    rng = np.random.default_rng(seed)
    return sorted(int(s) for s in rng.choice(n, size=min(max(1, count), n), replace=False))


def run_bench(
    spec: SynthSpec,
    lengths: Sequence[int],
    methods: Sequence[str] = METHODS,
    ranks: Sequence[int] | None = None,
    theta: float = 0.7,
    reps: int = 5,
    offsets: int = 3,
    block_size: int | None = None,
    seed: int = 0,
) -> list[BenchRow]:
    """Build every method's index on ``generate_synthetic(spec)`` and time range queries.

    Query rows report the stitched part count in ``stitches``; build rows for
    the tree report its cumulative stitch count. ``rel_error`` is measured
    against from-scratch ALS on the same range.
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    x = generate_synthetic(spec)
    T = x.shape[0]
    cfg = AlsConfig(tuple(ranks or spec.ranks), seed=seed)
    rows: list[BenchRow] = []

    tree = index = None
    if "sst" in methods:
        t0 = time.perf_counter()
        tree = StreamSegmentTree(x.shape[1:], cfg.ranks, theta, seed=seed)
        tree.extend(x)
        rows.append(BenchRow("build", T, T, "sst", time.perf_counter() - t0, stitches=tree.stitch_count))
    if "block" in methods:
        t0 = time.perf_counter()
        index = build_blocks(x, block_size, cfg)
        rows.append(BenchRow("build", T, T, "block", time.perf_counter() - t0, stitches=0))

    for L in lengths:
        if not 1 <= L <= T:
            continue
        for start in query_starts(T, L, offsets, seed):
            stop = start + L
            xs = x[start:stop]
            ref, ref_time = timed(lambda: brute_force_range(x, start, stop, cfg), reps if "brute" in methods else 1)
            if "brute" in methods:
                rows.append(BenchRow("query", L, T, "brute", ref_time, 0.0, 0, 0, 0))
            if tree is not None:
                def sst_query():
                    hits, parts = collect_parts(tree, start, stop, theta)
                    return hits, stitch(parts, cfg)
                (hits, f), secs = timed(sst_query, reps)
                entire, partial = hit_counts(hits)
                rows.append(BenchRow("query", L, T, "sst", secs, relative_error(xs, f, ref), entire, partial, len(hits)))
            if index is not None:
                def block_query():
                    parts = block_parts(index, start, stop)
                    return parts, stitch(parts, cfg)
                (parts, f), secs = timed(block_query, reps)
                b = index.block_size
                whole = sum(1 for k in range(start // b, (stop - 1) // b + 1)
                            if start <= k * b and min((k + 1) * b, T) <= stop)
                rows.append(BenchRow("query", L, T, "block", secs, relative_error(xs, f, ref),
                                     whole, len(parts) - whole, len(parts)))
    return rows


def write_report(path, rows: Sequence[BenchRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        for row in rows:
            w.writerow(row.as_list())


def read_report(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
