"""Range queries over a :class:`~tuckerseg.tree.StreamSegmentTree`."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .stitch import stitch
from .tensor import mode_product, thin_qr
from .tree import Node, NodeKind, StreamSegmentTree
from .tucker import AlsConfig, TuckerFactors


class HitKind(enum.Enum):
    ENTIRE = "entire"
    PARTIAL = "partial"


@dataclass(frozen=True)
class HitEntry:
    node_id: int
    start: int
    stop: int
    kind: HitKind
    node_start: int
    node_stop: int

    @property
    def length(self) -> int:
        return self.stop - self.start


def check_range(tree: StreamSegmentTree, start: int, stop: int) -> None:
    if not 0 <= start < stop <= tree.timespan:
        raise ValueError(f"range [{start},{stop}) is not a nonempty subrange of [0,{tree.timespan})")


def _accepts(v: Node, start: int, stop: int, theta: float) -> bool:
    if v.kind == NodeKind.PLACEHOLDER:
        return False
    overlap = min(stop, v.stop) - max(start, v.start)
    return overlap >= theta * v.length


def recall(tree: StreamSegmentTree, start: int, stop: int, theta: float | None = None) -> list[HitEntry]:
    """Smallest hit set for ``[start, stop)``, ordered by time.

    Descends from the root and keeps the first materialized node on each branch
    whose overlap with the query covers at least a ``theta`` fraction of the
    node's own range.
    """
    theta = tree.theta if theta is None else theta
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    with tree.lock:
        check_range(tree, start, stop)
        hits: list[HitEntry] = []
        _recall(tree, tree.nodes[tree.root], start, stop, theta, hits)
    return hits


def _recall(tree, v, start, stop, theta, hits):
    if _accepts(v, start, stop, theta):
        a, b = max(start, v.start), min(stop, v.stop)
        kind = HitKind.ENTIRE if (a, b) == (v.start, v.stop) else HitKind.PARTIAL
        hits.append(HitEntry(v.id, a, b, kind, v.start, v.stop))
        return
    left = tree.nodes[v.left]
    if stop <= left.stop:
        _recall(tree, left, start, stop, theta, hits)
    elif start >= left.stop:
        _recall(tree, tree.nodes[v.right], start, stop, theta, hits)
    else:
        _recall(tree, left, start, stop, theta, hits)
        _recall(tree, tree.nodes[v.right], start, stop, theta, hits)


def partial_hit_factors(f: TuckerFactors, start: int, stop: int) -> TuckerFactors:
    """Approximate decomposition of rows ``[start, stop)`` (node-relative) of ``f``.

    The selected temporal factor rows are re-orthonormalized by QR and the
    triangular factor is folded into the core.
    """
    if not 0 <= start < stop <= f.shape[0]:
        raise ValueError(f"offset range [{start},{stop}) invalid for {f.shape[0]} rows")
    q, r = thin_qr(f.factors[0][start:stop])
    return TuckerFactors(mode_product(f.core, r, 0), [q] + f.factors[1:])


def hit_factors(tree: StreamSegmentTree, hit: HitEntry) -> TuckerFactors:
    f = tree.nodes[hit.node_id].factors
    if hit.kind == HitKind.ENTIRE:
        return f
    return partial_hit_factors(f, hit.start - hit.node_start, hit.stop - hit.node_start)


def collect_parts(
    tree: StreamSegmentTree, start: int, stop: int, theta: float | None = None
) -> tuple[list[HitEntry], list[TuckerFactors]]:
    """Hit set of the range plus the decomposition each hit contributes."""
    with tree.lock:
        hits = recall(tree, start, stop, theta)
        parts = [hit_factors(tree, h) for h in hits]
    return hits, parts


def range_query(
    tree: StreamSegmentTree,
    start: int,
    stop: int,
    theta: float | None = None,
    cfg: AlsConfig | None = None,
) -> TuckerFactors:
    """Tucker decomposition of slices ``[start, stop)`` stitched from the tree."""
    _, parts = collect_parts(tree, start, stop, theta)
    return stitch(parts, tree.als if cfg is None else cfg)


def hit_counts(hits: list[HitEntry]) -> tuple[int, int]:
    """``(entire, partial)`` counts of a hit set."""
    partial = sum(1 for h in hits if h.kind == HitKind.PARTIAL)
    return len(hits) - partial, partial

