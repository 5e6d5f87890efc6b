"""Binary tensor files (TTS1), tree files (SST1) and CSV slice import.

All integers and floats are little-endian. A TTS1 file is::

    b"TTS1" | u16 version=1 | u8 p | p x u64 dims | prod(dims) x f64 (row-major)

An SST1 file is::

    b"SST1" | u16 version=1
    u64 T | u8 p | (p-1) x u64 slice dims | p x u64 ranks
    f64 theta | u64 max_iters | f64 tol | u64 seed
    u64 stitch_count | u64 next_id | i64 root (-1 if empty) | u64 node count
    per node, by ascending id:
        u64 id | u64 start | u64 stop | u8 kind | i64 left | i64 right | u8 has_factors
        if has_factors: core as (u8 ndim, ndim x u64 dims, f64 data),
                        then p factors as (u64 rows, u64 cols, f64 data)
"""

from __future__ import annotations

import csv
import io as _io
import struct
from pathlib import Path

import numpy as np

from .tensor import as_tensor
from .tree import Node, NodeKind, StreamSegmentTree
from .tucker import TuckerFactors

TTS_MAGIC = b"TTS1"
SST_MAGIC = b"SST1"
TTS_VERSION = 1
SST_VERSION = 1


class FormatError(ValueError):
    """Raised for malformed or truncated TTS1/SST1 payloads."""


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated: wanted {n} bytes at offset {self.pos}, have {len(self.buf) - self.pos}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise FormatError(f"{len(self.buf) - self.pos} trailing bytes")


def _f64(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def tensor_to_bytes(x: np.ndarray) -> bytes:
    x = np.asarray(x, dtype=np.float64)
    if not 1 <= x.ndim <= 255:
        raise ValueError(f"cannot store a {x.ndim}-way tensor")
    head = TTS_MAGIC + struct.pack("<HB", TTS_VERSION, x.ndim)
    return head + struct.pack(f"<{x.ndim}Q", *x.shape) + _f64(x)


def tensor_from_bytes(buf: bytes) -> np.ndarray:
    r = _Reader(buf)
    if bytes(r.take(4)) != TTS_MAGIC:
        raise FormatError("not a TTS1 file (bad magic)")
    version, p = r.unpack("HB")
    if version != TTS_VERSION:
        raise FormatError(f"unsupported TTS version {version}")
    dims = r.unpack(f"{p}Q")
    x = r.floats(int(np.prod(dims, dtype=np.int64))).reshape(dims)
    r.done()
    return as_tensor(x)


def write_tensor(path, x: np.ndarray) -> None:
    Path(path).write_bytes(tensor_to_bytes(x))


def read_csv_slice(path) -> np.ndarray:
    """One slice from CSV: a header row of dims, then row-major values.

    Values may be spread over any number of rows. Floats go through Python's
    decimal parser, so a CSV round-trip is only exact if values were written
    with ``repr`` precision.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if any(c.strip() for c in row)]
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    try:
        dims = tuple(int(c) for c in rows[0] if c.strip())
        vals = [float(c) for row in rows[1:] for c in row if c.strip()]
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None
    if int(np.prod(dims)) != len(vals):
        raise FormatError(f"{path}: header dims {dims} need {int(np.prod(dims))} values, got {len(vals)}")
    return as_tensor(np.reshape(vals, dims))


def read_tensor(path) -> np.ndarray:
    """Load a TTS1 file, or a single slice from ``.csv`` (returned with a leading temporal axis)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv_slice(path)[None]
    return tensor_from_bytes(path.read_bytes())


def _factors_to_bytes(f: TuckerFactors) -> bytes:
    out = [struct.pack("<B", f.core.ndim), struct.pack(f"<{f.core.ndim}Q", *f.core.shape), _f64(f.core)]
    for u in f.factors:
        out += [struct.pack("<QQ", *u.shape), _f64(u)]
    return b"".join(out)


def _factors_from(r: _Reader) -> TuckerFactors:
    (ndim,) = r.unpack("B")
    dims = r.unpack(f"{ndim}Q")
    core = r.floats(int(np.prod(dims, dtype=np.int64))).reshape(dims)
    factors = []
    for _ in range(ndim):
        rows, cols = r.unpack("QQ")
        factors.append(r.floats(rows * cols).reshape(rows, cols))
    try:
        return TuckerFactors(core, factors)
    except ValueError as e:
        raise FormatError(str(e)) from None


def tree_to_bytes(tree: StreamSegmentTree) -> bytes:
    p = len(tree.nontemporal_shape) + 1
    als = tree.als
    out = _io.BytesIO()
    out.write(SST_MAGIC + struct.pack("<H", SST_VERSION))
    out.write(struct.pack("<QB", tree.timespan, p))
    out.write(struct.pack(f"<{p - 1}Q", *tree.nontemporal_shape))
    out.write(struct.pack(f"<{p}Q", *als.ranks))
    out.write(struct.pack("<dQdQ", tree.theta, als.max_iters, als.tol, als.seed))
    root = -1 if tree.root is None else tree.root
    out.write(struct.pack("<QQqQ", tree.stitch_count, tree._next_id, root, len(tree.nodes)))
    for nid in sorted(tree.nodes):
        v = tree.nodes[nid]
        left = -1 if v.left is None else v.left
        right = -1 if v.right is None else v.right
        has = v.factors is not None
        out.write(struct.pack("<QQQBqqB", v.id, v.start, v.stop, int(v.kind), left, right, has))
        if has:
            out.write(_factors_to_bytes(v.factors))
    return out.getvalue()


def tree_from_bytes(buf: bytes) -> StreamSegmentTree:
    r = _Reader(buf)
    if bytes(r.take(4)) != SST_MAGIC:
        raise FormatError("not an SST1 file (bad magic)")
    (version,) = r.unpack("H")
    if version != SST_VERSION:
        raise FormatError(f"unsupported SST version {version}")
    T, p = r.unpack("QB")
    if p < 2:
        raise FormatError(f"tree must have at least 2 modes, got {p}")
    shape = r.unpack(f"{p - 1}Q")
    ranks = r.unpack(f"{p}Q")
    theta, max_iters, tol, seed = r.unpack("dQdQ")
    stitch_count, next_id, root, count = r.unpack("QQqQ")
    try:
        tree = StreamSegmentTree(shape, ranks, theta, max_iters=max_iters, tol=tol, seed=seed)
    except ValueError as e:
        raise FormatError(str(e)) from None
    for _ in range(count):
        nid, start, stop, kind, left, right, has = r.unpack("QQQBqqB")
        try:
            kind = NodeKind(kind)
        except ValueError:
            raise FormatError(f"node {nid}: unknown kind {kind}") from None
        f = _factors_from(r) if has else None
        tree.nodes[nid] = Node(
            nid, start, stop, kind,
            None if left < 0 else left, None if right < 0 else right, f,
        )
    r.done()
    tree.timespan = T
    tree.stitch_count = stitch_count
    tree._next_id = next_id
    tree.root = None if root < 0 else root
    for v in tree.nodes.values():
        for c in (v.left, v.right):
            if c is not None and c not in tree.nodes:
                raise FormatError(f"node {v.id} references missing child {c}")
    if tree.root is not None and tree.root not in tree.nodes:
        raise FormatError(f"missing root node {tree.root}")
    return tree


def write_tree(path, tree: StreamSegmentTree) -> None:
    with tree.lock:
        data = tree_to_bytes(tree)
    # Write-then-rename so a failed write never clobbers the old tree.
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def read_tree(path) -> StreamSegmentTree:
    return tree_from_bytes(Path(path).read_bytes())


def bundle_paths(prefix, p: int) -> tuple[Path, list[Path]]:
    """File names for a stored decomposition: ``<prefix>.core.tts`` and ``<prefix>.factor<n>.tts``."""
    prefix = str(prefix)
    if prefix.endswith(".tts"):
        prefix = prefix[:-4]
    return Path(prefix + ".core.tts"), [Path(f"{prefix}.factor{n}.tts") for n in range(p)]


def write_factors(prefix, f: TuckerFactors) -> list[Path]:
    core_path, factor_paths = bundle_paths(prefix, f.ndim)
    write_tensor(core_path, f.core)
    for path, u in zip(factor_paths, f.factors):
        write_tensor(path, u)
    return [core_path, *factor_paths]


def read_factors(prefix) -> TuckerFactors:
    core_path, _ = bundle_paths(prefix, 0)
    core = read_tensor(core_path)
    _, factor_paths = bundle_paths(prefix, core.ndim)
    return TuckerFactors(core, [read_tensor(path) for path in factor_paths])
