"""Matrix-free operators over graphs.

Each operator counts its own applications (``matvecs``) and the number of
matrix entries it touched (``visits``) so callers can audit solver cost.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..graph import Graph, degrees


class LinearOperator:
    """``apply(x) -> M x`` on vectors of length ``dim``.

    ``tag`` names the structure: ``"dense"``, ``"adjacency"``,
    ``"rank-one-augmented"``, ``"diagonally-scaled"`` or
    ``"non-backtracking"``.
    """

    def __init__(self, dim, apply, *, tag="dense", symmetric=False, cost=None, apply_block=None):
        self.dim = int(dim)
        self._apply = apply
        self._apply_block = apply_block
        self.tag = tag
        self.symmetric = symmetric
        self.cost = dim * dim if cost is None else int(cost)
        self.matvecs = 0
        self.visits = 0

    def matvec(self, x: np.ndarray) -> np.ndarray:
        self.matvecs += 1
        self.visits += self.cost
        return self._apply(x)

    def matmat(self, X: np.ndarray) -> np.ndarray:
        k = X.shape[1]
        self.matvecs += k
        self.visits += k * self.cost
        if self._apply_block is not None:
            return self._apply_block(X)
        return np.column_stack([self._apply(X[:, c]) for c in range(k)])

    def reset_counters(self) -> None:
        self.matvecs = 0
        self.visits = 0

    def to_dense(self) -> np.ndarray:
        """Materialize column by column (counts as ``dim`` mat-vecs)."""
        return self.matmat(np.eye(self.dim))

    def __repr__(self):
        return f"LinearOperator(dim={self.dim}, tag={self.tag!r})"


def dense_op(M) -> LinearOperator:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("square matrix required")
    sym = bool(np.allclose(M, M.T, rtol=0, atol=0))
    return LinearOperator(M.shape[0], M.__matmul__, tag="dense", symmetric=sym,
                          cost=np.count_nonzero(M), apply_block=M.__matmul__)


def adjacency_op(g: Graph) -> LinearOperator:
    return LinearOperator(g.n, g.matvec, tag="adjacency", symmetric=True,
                          cost=g.nnz + g.n, apply_block=g.matmat)


def regularized_laplacian_op(g: Graph, tau: float = 0.1) -> LinearOperator:
    """``L_tau = D_tau^{-1/2} (A + tau*dbar/n 11^T) D_tau^{-1/2}`` without forming it.

    Each application costs one sparse mat-vec plus O(n) for the rank-one term.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    n = g.n
    deg = degrees(g)
    shift = tau * deg.mean / n if n else 0.0
    d_tau = deg.d + shift * n
    if n == 0 or np.any(d_tau <= 0):
        raise ValueError("regularized degree is zero (isolated vertex with tau=0)")
    s = 1.0 / np.sqrt(d_tau)

    def apply(x):
        y = s * x
        return s * (g.matvec(y) + shift * y.sum())

    def apply_block(X):
        Y = s[:, None] * X
        return s[:, None] * (g.matmat(Y) + shift * Y.sum(axis=0)[None, :])

    op = LinearOperator(n, apply, tag="rank-one-augmented", symmetric=True,
                        cost=g.nnz + 2 * n, apply_block=apply_block)
    op.sqrt_degree = np.sqrt(d_tau)
    op.shift = shift
    return op


def nb_operator(g: Graph) -> LinearOperator:
    """The 2n x 2n block operator [[0, D - I], [-I, A]]."""
    n = g.n
    dm1 = np.diff(g.indptr).astype(float) - 1.0

    def apply(z):
        x, y = z[:n], z[n:]
        return np.concatenate([dm1 * y, g.matvec(y) - x])

    return LinearOperator(2 * n, apply, tag="non-backtracking", symmetric=False,
                          cost=g.nnz + 3 * n)


def nb_dense(g: Graph) -> np.ndarray:
    """Explicit block matrix; meant for small graphs and oracles."""
    n = g.n
    A = g.to_dense()
    d = A.sum(axis=1)
    top = np.hstack([np.zeros((n, n)), np.diag(d - 1.0)])
    bot = np.hstack([-np.eye(n), A])
    return np.vstack([top, bot])


def nb_norm_estimate(g: Graph) -> float:
    """``sum(d^2) / sum(d) - 1``, evaluated exactly then rounded once."""
    d = degrees(g).d
    total = int(d.sum())
    if total == 0:
        raise ValueError("graph has no edges")
    sq = sum(int(v) * int(v) for v in d)
    return float(Fraction(sq, total) - 1)
