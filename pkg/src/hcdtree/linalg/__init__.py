from .arnoldi import RitzValues, arnoldi_rightmost, nb_leading_real_parts
from .kmeans import NoSeparationError, kmeans, kmeans2
from .lanczos import (DegenerateGapWarning, EigenPair, NonConvergenceError, lanczos_extreme,
                      second_eigvec_adjacency)
from .operators import (LinearOperator, adjacency_op, dense_op, nb_dense, nb_norm_estimate,
                        nb_operator, regularized_laplacian_op)

__all__ = [
    "DegenerateGapWarning", "EigenPair", "LinearOperator", "NoSeparationError",
    "NonConvergenceError", "RitzValues", "adjacency_op", "arnoldi_rightmost", "dense_op",
    "kmeans", "kmeans2", "lanczos_extreme", "nb_dense", "nb_leading_real_parts",
    "nb_norm_estimate", "nb_operator", "regularized_laplacian_op", "second_eigvec_adjacency",
]
