from nvgen.trace.analysis import (
    CallMatrix,
    CallTreeNode,
    DivergenceDetector,
    DivergenceResult,
    IndexComparison,
    MissingProbe,
    ProbeConfigMismatch,
    UnbalancedTrace,
    build_call_matrix,
    build_call_tree,
    call_tree_dot,
    compare_index_traces,
    detect_divergence,
    diff_call_matrices,
    index_segments,
    tree_edge_counts,
)
from nvgen.trace.cache import TraceCache

__all__ = [
    "CallMatrix", "CallTreeNode", "DivergenceDetector", "DivergenceResult", "IndexComparison",
    "MissingProbe", "ProbeConfigMismatch", "UnbalancedTrace", "build_call_matrix",
    "build_call_tree", "call_tree_dot", "compare_index_traces", "detect_divergence",
    "diff_call_matrices", "index_segments", "tree_edge_counts", "TraceCache",
]
