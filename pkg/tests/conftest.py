from __future__ import annotations

from collections import deque

import numpy as np
import pytest

from tuckerseg.tree import NodeKind, StreamSegmentTree


def tiny_tree(T: int, shape=(2, 2), ranks=None, theta=0.7, seed=0) -> StreamSegmentTree:
    """Tree over ``T`` random slices; ranks default to 1 per mode to keep it cheap."""
    rng = np.random.default_rng(seed)
    ranks = ranks or (1,) * (len(shape) + 1)
    tree = StreamSegmentTree(shape, ranks, theta, seed=seed)
    tree.extend(rng.standard_normal((T, *shape)))
    return tree


def min_hit_count(tree: StreamSegmentTree, start: int, stop: int, theta: float) -> int:
    """Fewest admissible nodes whose intersections tile ``[start, stop)``.

    Independent of the recursive search: a breadth-first search over time
    positions, with an edge ``a -> b`` whenever some materialized node
    intersects the query in exactly ``[a, b)`` with overlap at least
    ``theta`` times its length.
    """
    edges: dict[int, set[int]] = {}
    for v in tree.nodes.values():
        if v.kind == NodeKind.PLACEHOLDER:
            continue
        a, b = max(start, v.start), min(stop, v.stop)
        if b > a and b - a >= theta * (v.stop - v.start):
            edges.setdefault(a, set()).add(b)
    dist = {start: 0}
    todo = deque([start])
    while todo:
        a = todo.popleft()
        for b in edges.get(a, ()):
            if b not in dist:
                dist[b] = dist[a] + 1
                todo.append(b)
    return dist.get(stop, -1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
