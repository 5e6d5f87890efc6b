"""Range queries of Tucker decompositions over an appendable tensor stream."""

from .query import HitEntry, HitKind, range_query, recall
from .stitch import stitch
from .tree import Node, NodeKind, StreamSegmentTree, build_tree
from .tucker import AlsConfig, TuckerFactors, reconstruct, relative_error, tucker_als

__version__ = "0.1.0"
