"""Build a nine-slice tree, print its layout and answer the range [1, 6)."""

import numpy as np

from tuckerseg import build_tree, range_query, recall
from tuckerseg.baseline import brute_force_range
from tuckerseg.tucker import relative_error, relative_residual


def main():
    x = np.random.default_rng(0).standard_normal((9, 6, 5))
    tree = build_tree(x, (3, 3, 3), theta=0.7)
    print(tree)
    for v, depth in tree.iter_nodes():
        print("  " * (depth - 1) + f"<{v.id}> [{v.start},{v.stop}) {v.kind.name.lower()}")

    hits = recall(tree, 1, 6)
    for h in hits:
        print(f"hit <{h.node_id}> [{h.node_start},{h.node_stop}) {h.kind.value} -> [{h.start},{h.stop})")
    f = range_query(tree, 1, 6)
    ref = brute_force_range(x, 1, 6, tree.als)
    print(f"relative residual {relative_residual(x[1:6], f):.4f}, "
          f"relative error vs from-scratch ALS {relative_error(x[1:6], f, ref):.4f}")


if __name__ == "__main__":
    main()
