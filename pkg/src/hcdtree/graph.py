"""Immutable sparse undirected graphs and structural preprocessing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from . import _kernels


class EdgeListParseError(ValueError):
    """Raised for a malformed edge-list line; carries the 1-based line number."""

    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: expected two node ids, got {line!r}")
        self.lineno = lineno


@dataclass(frozen=True)
class DegreeVector:
    d: np.ndarray
    total: int

    @property
    def mean(self) -> float:
        return self.total / len(self.d) if len(self.d) else 0.0


@dataclass(frozen=True, eq=False)
class Graph:
    """Symmetric 0/1 adjacency in CSR form with sorted neighbour lists.

    ``node_ids[i]`` is the external identifier of internal vertex ``i``.
    Build instances with :meth:`from_edges` or :func:`from_edge_list`;
    the constructor trusts its arguments.
    """

    indptr: np.ndarray
    indices: np.ndarray
    node_ids: tuple

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def nnz(self) -> int:
        """Number of stored entries, i.e. twice the edge count."""
        return len(self.indices)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    @classmethod
    def from_edges(cls, n: int, rows, cols, node_ids: Sequence[Hashable] | None = None) -> "Graph":
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols differ in length")
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
            raise IndexError("edge endpoint out of range")
        keep = rows != cols
        r = np.concatenate([rows[keep], cols[keep]])
        c = np.concatenate([cols[keep], rows[keep]])
        # dedupe on the (row, col) key, which also sorts each neighbour list
        key = np.unique(r * n + c) if n else np.empty(0, dtype=np.int64)
        r, c = np.divmod(key, n) if n else (key, key)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
        indices = c.astype(np.int64)
        indptr.flags.writeable = False
        indices.flags.writeable = False
        ids = tuple(range(n)) if node_ids is None else tuple(node_ids)
        if len(ids) != n:
            raise ValueError("node_ids length must equal n")
        return cls(indptr, indices, ids)

    @classmethod
    def from_dense(cls, A) -> "Graph":
        A = np.asarray(A)
        r, c = np.nonzero(np.triu(A, 1))
        return cls.from_edges(A.shape[0], r, c)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Edge array of shape (m, 2) with i < j, in ascending lexicographic order."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        upper = rows < self.indices
        return np.column_stack([rows[upper], self.indices[upper]])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return _kernels.csr_matvec(self.indptr, self.indices, np.ascontiguousarray(x, dtype=float))

    def matmat(self, X: np.ndarray) -> np.ndarray:
        return _kernels.csr_matmat(self.indptr, self.indices, np.ascontiguousarray(X, dtype=float))

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        A[rows, self.indices] = 1.0
        return A

    def to_scipy(self):
        import scipy.sparse as sp

        data = np.ones(self.nnz)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.node_ids == other.node_ids
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.n_edges})"


def from_edge_list(lines: Iterable[str]) -> Graph:
    """Parse whitespace-separated id pairs; ``#`` lines and blank lines are skipped.

    Node ids keep their first-appearance order.  Extra tokens after the
    first two are ignored.
    """
    index: dict[str, int] = {}
    rows, cols = [], []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) < 2:
            raise EdgeListParseError(lineno, raw.rstrip("\n"))
        a = index.setdefault(tok[0], len(index))
        b = index.setdefault(tok[1], len(index))
        rows.append(a)
        cols.append(b)
    return Graph.from_edges(len(index), rows, cols, list(index))


def read_edge_list(path) -> Graph:
    with open(path) as fh:
        return from_edge_list(fh)


def write_edge_list(g: Graph, fh, use_ids: bool = False) -> None:
    """Write one ``i j`` line per edge with i < j in lexicographic order.

    With ``use_ids`` the external ids are written instead of indices.
    """
    for i, j in g.edges():
        if use_ids:
            fh.write(f"{g.node_ids[i]} {g.node_ids[j]}\n")
        else:
            fh.write(f"{i} {j}\n")


def degrees(g: Graph) -> DegreeVector:
    d = np.diff(g.indptr).astype(np.int64)
    return DegreeVector(d, int(d.sum()))


def induced_subgraph(g: Graph, nodes) -> Graph:
    nodes = np.asarray(nodes, dtype=np.int64).ravel()
    if nodes.size and (nodes.min() < 0 or nodes.max() >= g.n):
        raise IndexError("node index out of range")
    nodes = np.unique(nodes)
    local = -np.ones(g.n, dtype=np.int64)
    local[nodes] = np.arange(nodes.size)
    rows = np.repeat(np.arange(g.n), np.diff(g.indptr))
    keep = (local[rows] >= 0) & (local[g.indices] >= 0) & (rows < g.indices)
    ids = [g.node_ids[i] for i in nodes]
    return Graph.from_edges(nodes.size, local[rows[keep]], local[g.indices[keep]], ids)


def connected_components(g: Graph) -> np.ndarray:
    """Per-vertex component label, equal to the smallest index in the component."""
    return np.asarray(_kernels.component_labels(g.indptr, g.indices))


def largest_connected_component(g: Graph) -> np.ndarray:
    """Vertices of a largest component; ties go to the smallest minimum index."""
    if g.n == 0:
        return np.empty(0, dtype=np.int64)
    label = connected_components(g)
    sizes = np.bincount(label, minlength=g.n)
    # labels are component minima, so argmax already picks the smallest on ties
    best = int(np.argmax(sizes))
    return np.flatnonzero(label == best)


def k_core(g: Graph, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be non-negative")
    return np.flatnonzero(_kernels.core_mask(g.indptr, g.indices, int(k)))
