"""Append-only segment tree over the temporal mode of a tensor stream.

Every fully observed node stores a Tucker decomposition of its time range.
Leaves hold single slices and intermediate nodes are stitched from their two
children once their range is complete. Placeholder nodes reserve ranges that
are still being filled and carry no decomposition. When the root range fills
up, a new root of twice the width is put on top, which keeps the height at
``ceil(log2 T) + 1``.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .stitch import stitch
from .tensor import as_tensor
from .tucker import AlsConfig, TuckerFactors, tucker_als

ORTHO_TOL = 1e-8


class NodeKind(enum.IntEnum):
    LEAF = 0
    INTERMEDIATE = 1
    PLACEHOLDER = 2


@dataclass
class Node:
    id: int
    start: int
    stop: int
    kind: NodeKind
    left: int | None = None
    right: int | None = None
    factors: TuckerFactors | None = None

    @property
    def length(self) -> int:
        return self.stop - self.start

    @property
    def mid(self) -> int:
        return (self.start + self.stop) // 2

    def __repr__(self):
        return f"<{self.id} {self.kind.name.lower()} [{self.start},{self.stop})>"


def expected_height(T: int) -> int:
    """``ceil(log2 T) + 1`` for ``T >= 1``, 0 for an empty stream."""
    if T <= 0:
        return 0
    return (T - 1).bit_length() + 1


class StreamSegmentTree:
    """Stream segment tree of preprocessed Tucker decompositions.

    Parameters
    ----------
    nontemporal_shape : sequence of int
        Shape ``(D_2, ..., D_p)`` of each appended slice.
    ranks : sequence of int
        Target Tucker ranks for all ``p`` modes, temporal first. Ranks are
        clamped per node to the node's shape.
    theta : float
        Default pruning threshold for range queries, in ``(0, 1)``.
    max_iters, tol, seed
        ALS settings used for leaves and stitching.

    Appends take an internal lock, and readers going through
    :func:`tuckerseg.query.collect_parts` take the same lock, so a query never
    sees a half-applied append.
    """

    def __init__(
        self,
        nontemporal_shape: Sequence[int],
        ranks: Sequence[int],
        theta: float = 0.7,
        *,
        max_iters: int = 20,
        tol: float = 0.01,
        seed: int = 0,
    ):
        self.nontemporal_shape = tuple(int(d) for d in nontemporal_shape)
        if not self.nontemporal_shape or any(d < 1 for d in self.nontemporal_shape):
            raise ValueError(f"invalid slice shape {self.nontemporal_shape}")
        if len(ranks) != len(self.nontemporal_shape) + 1:
            raise ValueError(
                f"need {len(self.nontemporal_shape) + 1} ranks (temporal first), got {len(ranks)}"
            )
        if not 0 < theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        self.als = AlsConfig(tuple(ranks), max_iters=max_iters, tol=tol, seed=seed)
        self.theta = float(theta)
        self.nodes: dict[int, Node] = {}
        self.root: int | None = None
        self.timespan = 0
        self.stitch_count = 0
        self.last_touched = 0
        self._next_id = 1
        self.lock = threading.RLock()

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.als.ranks

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.timespan,) + self.nontemporal_shape

    def __len__(self) -> int:
        return self.timespan

    def __repr__(self):
        return (
            f"StreamSegmentTree(T={self.timespan}, slice_shape={self.nontemporal_shape}, "
            f"ranks={self.ranks}, height={self.height()})"
        )

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def _new_node(self, start: int, stop: int, left: int | None = None) -> Node:
        v = Node(self._next_id, start, stop, NodeKind.PLACEHOLDER, left=left)
        self.nodes[v.id] = v
        self._next_id += 1
        return v

    def append(self, x_slice) -> None:
        """Append one slice of shape ``nontemporal_shape``."""
        x_slice = as_tensor(x_slice)
        if x_slice.shape != self.nontemporal_shape:
            raise ValueError(
                f"slice has shape {x_slice.shape}, tree expects {self.nontemporal_shape}"
            )
        with self.lock:
            T = self.timespan
            self.last_touched = 0
            if T == 0:
                self.root = self._new_node(0, 1).id
            elif T == self.nodes[self.root].stop:
                self.root = self._new_node(0, 2 * T, left=self.root).id
            self._insert(self.nodes[self.root], T, x_slice)
            self.timespan = T + 1

    def extend(self, x) -> None:
        """Append every slice of ``x`` along its temporal mode, in order."""
        x = as_tensor(x)
        if x.shape[1:] != self.nontemporal_shape:
            raise ValueError(
                f"tensor has slice shape {x.shape[1:]}, tree expects {self.nontemporal_shape}"
            )
        for s in x:
            self.append(s)

    def _insert(self, v: Node, T: int, x_slice: np.ndarray) -> None:
        self.last_touched += 1
        if v.start == T and v.stop == T + 1:
            v.factors = tucker_als(x_slice[None], self.als)
            v.kind = NodeKind.LEAF
            return
        mu = v.mid
        if T < mu:
            if v.left is None:
                v.left = self._new_node(v.start, mu).id
            self._insert(self.nodes[v.left], T, x_slice)
        else:
            if v.right is None:
                v.right = self._new_node(mu, v.stop).id
            self._insert(self.nodes[v.right], T, x_slice)
            if v.stop == T + 1:
                left, right = self.nodes[v.left], self.nodes[v.right]
                v.factors = stitch([left.factors, right.factors], self.als)
                v.kind = NodeKind.INTERMEDIATE
                self.stitch_count += 1

    def children(self, v: Node) -> list[Node]:
        return [self.nodes[c] for c in (v.left, v.right) if c is not None]

    def iter_nodes(self) -> Iterator[tuple[Node, int]]:
        """Depth-first ``(node, depth)`` pairs from the root (depth 1)."""
        if self.root is None:
            return
        stack = [(self.nodes[self.root], 1)]
        while stack:
            v, d = stack.pop()
            yield v, d
            for c in reversed(self.children(v)):
                stack.append((c, d + 1))

    def height(self) -> int:
        """Number of nodes on the longest root-to-node path (0 when empty)."""
        return max((d for _, d in self.iter_nodes()), default=0)

    def leaves(self) -> list[Node]:
        return sorted(
            (v for v in self.nodes.values() if v.kind == NodeKind.LEAF), key=lambda v: v.start
        )

    def count(self, kind: NodeKind) -> int:
        return sum(1 for v in self.nodes.values() if v.kind == kind)

    def validate(self) -> list[str]:
        """Structural invariant violations, as readable messages (empty when valid)."""
        errs: list[str] = []
        T = self.timespan
        if self.root is None:
            if T or self.nodes:
                errs.append(f"no root but T={T} and {len(self.nodes)} nodes")
            return errs

        reachable = {v.id for v, _ in self.iter_nodes()}
        if reachable != set(self.nodes):
            errs.append(f"unreachable nodes: {sorted(set(self.nodes) - reachable)}")

        root = self.nodes[self.root]
        want_stop = 1 if T <= 1 else 1 << (T - 1).bit_length()
        if (root.start, root.stop) != (0, want_stop):
            errs.append(f"root {root!r} should span [0,{want_stop})")

        for v in self.nodes.values():
            errs.extend(self._check_node(v, T))

        leaves = self.leaves()
        if [(v.start, v.stop) for v in leaves] != [(t, t + 1) for t in range(T)]:
            errs.append(f"leaf ranges do not tile [0,{T})")

        h, want = self.height(), expected_height(T)
        if h != want:
            errs.append(f"height {h}, expected ceil(log2 {T})+1 = {want}")
        return errs

    def _check_node(self, v: Node, T: int) -> list[str]:
        errs = []
        if not v.start < v.stop:
            errs.append(f"{v!r}: empty range")
        kids = self.children(v)
        if v.right is not None and v.left is None:
            errs.append(f"{v!r}: right child without left child")
        if kids:
            expect = [(v.start, v.mid), (v.mid, v.stop)][: len(kids)]
            got = [(c.start, c.stop) for c in kids]
            if got != expect:
                errs.append(f"{v!r}: children ranges {got} are not adjoint halves {expect}")

        if v.kind == NodeKind.LEAF:
            if v.length != 1 or kids:
                errs.append(f"{v!r}: leaf must span one slice and have no children")
        elif v.kind == NodeKind.INTERMEDIATE:
            if len(kids) != 2 or any(c.kind == NodeKind.PLACEHOLDER for c in kids):
                errs.append(f"{v!r}: intermediate node needs two materialized children")
        else:
            if v.factors is not None:
                errs.append(f"{v!r}: placeholder carries a decomposition")
            if not kids:
                errs.append(f"{v!r}: placeholder without children")
            if len(kids) == 2 and (
                kids[0].kind == NodeKind.PLACEHOLDER or kids[1].kind != NodeKind.PLACEHOLDER
            ):
                errs.append(f"{v!r}: placeholder with two children needs a complete left, pending right")
            if not v.start < T <= v.stop:
                errs.append(f"{v!r}: placeholder not straddling T={T}")

        if v.stop <= T and v.kind == NodeKind.PLACEHOLDER:
            errs.append(f"{v!r}: fully observed but still a placeholder")
        if v.kind != NodeKind.PLACEHOLDER:
            errs.extend(self._check_factors(v))
        return errs

    def _check_factors(self, v: Node) -> list[str]:
        f = v.factors
        if f is None:
            return [f"{v!r}: missing decomposition"]
        errs = []
        want = (v.length,) + self.nontemporal_shape
        if f.shape != want:
            errs.append(f"{v!r}: decomposition shape {f.shape}, expected {want}")
        err = f.orthonormality_error()
        if not err <= ORTHO_TOL:
            errs.append(f"{v!r}: factor orthonormality error {err:.3g} exceeds {ORTHO_TOL:g}")
        if not all(np.all(np.isfinite(a)) for a in [f.core, *f.factors]):
            errs.append(f"{v!r}: non-finite values in decomposition")
        return errs


def build_tree(x, ranks: Sequence[int], theta: float = 0.7, **als) -> StreamSegmentTree:
    """Build a tree by appending every slice of ``x`` in order."""
    x = as_tensor(x)
    tree = StreamSegmentTree(x.shape[1:], ranks, theta, **als)
    tree.extend(x)
    return tree


def log2_ceil(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0
