"""Median relative error of SST and block range queries against from-scratch ALS.

Sweeps query lengths on the (256, 20, 15) rank-5 synthetic family at several
noise levels, using every fifth start offset.
"""

import statistics

from tuckerseg.baseline import (
    SynthSpec,
    block_range_query,
    brute_force_range,
    build_blocks,
    generate_synthetic,
)
from tuckerseg.query import range_query
from tuckerseg.tree import build_tree
from tuckerseg.tucker import AlsConfig, relative_error

SHAPE, RANKS = (256, 20, 15), (5, 5, 5)


def main():
    cfg = AlsConfig(RANKS)
    print(f"{'eps':>5} {'L':>4} {'sst':>8} {'block':>8}")
    for eps in (0.01, 0.05, 0.1):
        x = generate_synthetic(SynthSpec(SHAPE, RANKS, eps, seed=0))
        tree = build_tree(x, RANKS)
        index = build_blocks(x, None, cfg)
        for L in (2, 4, 8, 16, 32, 64, 128, 256):
            sst, blk = [], []
            for a in range(0, SHAPE[0] - L + 1, 5):
                ref = brute_force_range(x, a, a + L, cfg)
                sst.append(relative_error(x[a:a + L], range_query(tree, a, a + L), ref))
                blk.append(relative_error(x[a:a + L], block_range_query(index, a, a + L, cfg), ref))
            print(f"{eps:5.2f} {L:4d} {statistics.median(sst):8.4f} {statistics.median(blk):8.4f}")
        print(f"      block size {index.block_size}")


if __name__ == "__main__":
    main()
