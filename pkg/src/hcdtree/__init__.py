"""Hierarchical community detection by recursive bi-partitioning."""
from .btsbm import BtsbmParams, CommunityTree, Labeling, sample_adjacency
from .graph import Graph, read_edge_list
from .hcd import StoppingRule, hcd_sign, hcd_spec, kway_rsc, recursive_partition
from .metrics import mega_accuracy, nmi, prob_matrix_error, tree_similarity_error

__version__ = "0.1.0"

__all__ = [
    "BtsbmParams", "CommunityTree", "Graph", "Labeling", "StoppingRule", "hcd_sign", "hcd_spec",
    "kway_rsc", "mega_accuracy", "nmi", "prob_matrix_error", "read_edge_list",
    "recursive_partition", "sample_adjacency", "tree_similarity_error",
]
