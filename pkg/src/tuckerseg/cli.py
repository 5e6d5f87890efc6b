"""Command-line interface: build, append, query, bench, validate."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .baseline import SynthSpec
from .bench import METHODS, run_bench, write_report
from .query import collect_parts, hit_counts
from .stitch import stitch
from .tensor import concat_temporal
from .tree import NodeKind, StreamSegmentTree
from .tucker import relative_residual

DEFAULT_THETA = 0.7


def default_seed() -> int:
    return int(os.environ.get("SST_SEED", "0"))


def default_ranks(shape) -> list[int]:
    """Rank 10 per mode, 5 for non-temporal modes with fewer than 10 entries."""
    return [10] + [5 if d < 10 else 10 for d in shape[1:]]


def resolve_ranks(arg: str | None, shape) -> list[int]:
    ranks = default_ranks(shape) if arg is None else _int_list(arg)
    if len(ranks) == 1:
        ranks = ranks * len(shape)
    if len(ranks) != len(shape):
        raise ValueError(f"{len(ranks)} ranks given for a {len(shape)}-way tensor")
    for n in range(1, len(shape)):
        if ranks[n] > shape[n]:
            _warn(f"rank {ranks[n]} exceeds mode {n} extent {shape[n]}; clamped")
            ranks[n] = shape[n]
    return ranks


def _int_list(s: str) -> list[int]:
    return [int(v) for v in s.replace("x", ",").split(",") if v.strip()]


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _parse_range(s: str) -> tuple[int, int]:
    try:
        a, b = s.split(":")
        return int(a), int(b)
    except ValueError:
        raise ValueError(f"range must look like START:STOP, got {s!r}") from None


def _summary(tree: StreamSegmentTree) -> str:
    counts = {k.name.lower(): tree.count(k) for k in NodeKind}
    return (
        f"T={tree.timespan} height={tree.height()} leaves={counts['leaf']} "
        f"intermediate={counts['intermediate']} placeholder={counts['placeholder']} "
        f"stitches={tree.stitch_count}"
    )


def cmd_build(args) -> int:
    if args.input:
        x = concat_temporal([io.read_tensor(p) for p in args.input])
    elif args.shape:
        x = np.zeros((0, *_int_list(args.shape)))
    else:
        raise ValueError("need --input or --shape")
    if x.ndim < 2:
        raise ValueError(f"input must have at least 2 modes, got {x.ndim}")
    ranks = resolve_ranks(args.ranks, x.shape)
    tree = StreamSegmentTree(
        x.shape[1:], ranks, args.theta, max_iters=args.max_iters, tol=args.tol, seed=args.seed
    )
    tree.extend(x)
    io.write_tree(args.out, tree)
    print(_summary(tree))
    return 0


def cmd_append(args) -> int:
    tree = io.read_tree(args.tree)
    x = io.read_tensor(args.slice)
    if x.shape == tree.nontemporal_shape:
        x = x[None]
    if x.shape[1:] != tree.nontemporal_shape:
        raise ValueError(f"slice shape {x.shape[1:]} does not match tree slice shape {tree.nontemporal_shape}")
    tree.extend(x)
    io.write_tree(args.tree, tree)
    print(_summary(tree))
    return 0


def cmd_query(args) -> int:
    tree = io.read_tree(args.tree)
    start, stop = _parse_range(args.range)
    hits, parts = collect_parts(tree, start, stop, args.theta)
    f = stitch(parts, tree.als)
    entire, partial = hit_counts(hits)
    print(f"range=[{start},{stop}) hits={len(hits)} entire={entire} partial={partial}")
    for h in hits:
        print(f"  node {h.node_id} [{h.node_start},{h.node_stop}) {h.kind.value} -> [{h.start},{h.stop})")
    if args.out:
        for path in io.write_factors(args.out, f):
            print(f"wrote {path}")
    if args.input:
        x = concat_temporal([io.read_tensor(p) for p in args.input])
        print(f"relative_residual={relative_residual(x[start:stop], f):.6g}")
    return 0


def _load_spec(s: str) -> SynthSpec:
    path = Path(s)
    data = json.loads(path.read_text() if path.exists() else s)
    return SynthSpec(
        tuple(data["shape"]), tuple(data["ranks"]), data.get("noise", 0.0), data.get("seed", 0)
    )


def cmd_bench(args) -> int:
    spec = _load_spec(args.spec)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    ranks = resolve_ranks(args.ranks, spec.shape) if args.ranks else None
    rows = run_bench(
        spec, _int_list(args.lengths), methods, ranks=ranks, theta=args.theta,
        reps=args.reps, offsets=args.offsets, block_size=args.block_size, seed=args.seed,
    )
    write_report(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_validate(args) -> int:
    tree = io.read_tree(args.tree)
    problems = tree.validate()
    if not problems:
        print(f"ok: {_summary(tree)}")
        return 0
    for msg in problems:
        print(msg)
    return 1


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tuckerseg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a tree file from a tensor stream")
    b.add_argument("--input", action="append", help="TTS1 tensor or CSV slice; repeat to concatenate")
    b.add_argument("--shape", help="slice shape for an empty tree, e.g. 20,15")
    b.add_argument("--ranks", help="comma-separated ranks, temporal first (one value = all modes)")
    b.add_argument("--theta", type=float, default=DEFAULT_THETA)
    b.add_argument("--seed", type=int, default=default_seed())
    b.add_argument("--max-iters", type=int, default=20)
    b.add_argument("--tol", type=float, default=0.01)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    a = sub.add_parser("append", help="append slices to a tree file in place")
    a.add_argument("--tree", required=True)
    a.add_argument("--slice", required=True, help="TTS1 slice (or stack of slices) or CSV slice")
    a.set_defaults(func=cmd_append)

    q = sub.add_parser("query", help="Tucker decomposition of a time range")
    q.add_argument("--tree", required=True)
    q.add_argument("--range", required=True, help="START:STOP, half-open")
    q.add_argument("--theta", type=float, default=None, help="override the tree's threshold")
    q.add_argument("--out", help="prefix for <out>.core.tts and <out>.factor<n>.tts")
    q.add_argument("--input", action="append", help="original data, to report the residual")
    q.set_defaults(func=cmd_query)

    be = sub.add_parser("bench", help="benchmark methods on synthetic data, write CSV")
    be.add_argument("--spec", required=True,
                    help='JSON (inline or file): {"shape": [...], "ranks": [...], "noise": 0.05, "seed": 0}')
    be.add_argument("--lengths", required=True, help="comma-separated query lengths")
    be.add_argument("--methods", default=",".join(METHODS))
    be.add_argument("--ranks", help="target ranks (default: the true ranks of the synthetic data)")
    be.add_argument("--theta", type=float, default=DEFAULT_THETA)
    be.add_argument("--reps", type=int, default=5)
    be.add_argument("--offsets", type=int, default=3)
    be.add_argument("--block-size", type=int, default=None)
    be.add_argument("--seed", type=int, default=default_seed())
    be.add_argument("--out", required=True)
    be.set_defaults(func=cmd_bench)

    v = sub.add_parser("validate", help="check tree invariants and factor orthonormality")
    v.add_argument("--tree", required=True)
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
