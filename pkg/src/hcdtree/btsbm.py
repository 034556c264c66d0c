"""Binary tree stochastic block model.

Community labels are binary strings such as ``"010"``; the empty string is
the root.  A balanced model of depth ``d`` has ``K = 2**d`` leaf communities
ordered by the integer value of their label.  Unbalanced trees (some sibling
leaves merged) are supported by the sampler but not by the closed-form
spectral oracles, which assume equal block sizes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .graph import Graph

# ---------------------------------------------------------------------------
# label algebra


def string_similarity(x: str, y: str) -> int:
    """First 1-based position where ``x`` and ``y`` differ.

    When one label is a prefix of the other (including ``x == y``) the
    result is ``min(len(x), len(y)) + 1``.
    """
    for q, (a, b) in enumerate(zip(x, y), 1):
        if a != b:
            return q
    return min(len(x), len(y)) + 1


def all_labels(d: int) -> list[str]:
    """All length-``d`` labels in binary-integer order."""
    return [format(k, f"0{d}b") if d else "" for k in range(2**d)]


def tree_distance(x: str, y: str, d: int) -> int:
    """Index into the probability sequence: 0 on the diagonal, else d+1-s."""
    if x == y:
        return 0
    return d + 1 - string_similarity(x, y)


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class BtsbmParams:
    """Depth, probability sequence p_0..p_d and leaf block sizes.

    ``leaves`` lists the leaf labels in block order.  It defaults to all
    length-``d`` strings; a shorter label marks a leaf formed by merging a
    whole subtree, which gives an unbalanced tree.
    """

    d: int
    p: tuple
    block_sizes: tuple
    leaves: tuple = None

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        object.__setattr__(self, "p", p)
        leaves = tuple(all_labels(self.d)) if self.leaves is None else tuple(self.leaves)
        object.__setattr__(self, "leaves", leaves)
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))
        if len(p) != self.d + 1:
            raise ValueError(f"need d+1={self.d + 1} probabilities, got {len(p)}")
        bad = [v for v in p if not 0.0 <= v <= 1.0]
        if bad:
            raise ValueError(f"probabilities outside [0, 1]: {bad}")
        if len(self.block_sizes) != len(leaves):
            raise ValueError("one block size per leaf required")
        if any(s <= 0 for s in self.block_sizes):
            raise ValueError("block sizes must be positive")
        if any(len(x) > self.d for x in leaves):
            raise ValueError("leaf label longer than depth")
        _check_leaf_cover(leaves)

    @classmethod
    def balanced(cls, d: int, p: Sequence[float], m: int) -> "BtsbmParams":
        return cls(d, tuple(p), (m,) * 2**d)

    @classmethod
    def from_rho(cls, d: int, rho: float, a: Sequence[float], block_sizes, leaves=None) -> "BtsbmParams":
        """``p = rho * (1, a_1, ..., a_d)``."""
        if len(a) != d:
            raise ValueError(f"need d={d} relative rates, got {len(a)}")
        return cls(d, tuple(rho * v for v in (1.0, *a)), tuple(block_sizes), leaves)

    @property
    def K(self) -> int:
        return len(self.leaves)

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    @property
    def is_balanced(self) -> bool:
        return all(len(x) == self.d for x in self.leaves)

    @property
    def equal_blocks(self) -> bool:
        return self.is_balanced and len(set(self.block_sizes)) == 1

    @property
    def assortative(self) -> bool:
        return all(a > b for a, b in zip(self.p, self.p[1:]))

    @property
    def disassortative(self) -> bool:
        return all(a < b for a, b in zip(self.p, self.p[1:]))

    def to_config(self) -> dict:
        return {"d": self.d, "p": list(self.p), "block_sizes": list(self.block_sizes),
                "leaves": list(self.leaves)}

    @classmethod
    def from_config(cls, cfg: dict) -> "BtsbmParams":
        d = int(cfg["d"])
        leaves = cfg.get("leaves")
        if "block_sizes" in cfg:
            sizes = cfg["block_sizes"]
        else:
            k = len(leaves) if leaves else 2**d
            sizes = [int(cfg["m"])] * k
        if "p" in cfg:
            return cls(d, tuple(cfg["p"]), tuple(sizes), leaves)
        return cls.from_rho(d, float(cfg["rho"]), cfg["a"], sizes, leaves)


def _check_leaf_cover(leaves: Sequence[str]) -> None:
    """Leaves must be distinct, prefix-free and cover every full-depth string."""
    if len(set(leaves)) != len(leaves):
        raise ValueError("duplicate leaf labels")
    total = sum(2.0 ** -len(x) for x in leaves)
    srt = sorted(leaves)
    for a, b in zip(srt, srt[1:]):
        if b.startswith(a):
            raise ValueError(f"leaf {a!r} is a prefix of {b!r}")
    if abs(total - 1.0) > 1e-12:
        raise ValueError("leaf labels do not cover the tree")


# ---------------------------------------------------------------------------
# community containers


@dataclass(frozen=True, eq=False)
class Labeling:
    """Node -> community id, with an optional binary-string name per id."""

    assign: np.ndarray
    names: tuple = None

    def __post_init__(self):
        a = np.asarray(self.assign, dtype=np.int64)
        object.__setattr__(self, "assign", a)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def n(self) -> int:
        return len(self.assign)

    @property
    def k(self) -> int:
        return int(self.assign.max()) + 1 if len(self.assign) else 0

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.k)

    def node_names(self) -> list[str]:
        if self.names is None:
            raise ValueError("labeling carries no community names")
        return [self.names[c] for c in self.assign]

    @classmethod
    def from_any(cls, labels) -> "Labeling":
        """Compact arbitrary hashable labels to ids 0..k-1 in first-seen order."""
        ids: dict = {}
        a = np.fromiter((ids.setdefault(x, len(ids)) for x in labels), dtype=np.int64)
        return cls(a)


class CommunityTree:
    """Binary tree of communities addressed by binary-string labels.

    Only the leaves store members; an internal node's member set is the
    union of its children's.
    """

    def __init__(self, leaves: dict, n: int | None = None):
        self._leaves = {x: np.sort(np.asarray(v, dtype=np.int64)) for x, v in leaves.items()}
        if self._leaves:
            _check_leaf_cover(list(self._leaves))
        nodes = set()
        for x in self._leaves:
            nodes.update(x[:q] for q in range(len(x) + 1))
        self._nodes = sorted(nodes, key=lambda s: (len(s), s))
        total = sum(len(v) for v in self._leaves.values())
        self.n = total if n is None else n
        allm = np.concatenate(list(self._leaves.values())) if self._leaves else np.empty(0, int)
        if len(allm) != self.n or len(np.unique(allm)) != len(allm) or (
                len(allm) and (allm.min() < 0 or allm.max() >= self.n)):
            raise ValueError("leaf member sets must partition range(n)")

    # -- structure
    @property
    def leaves(self) -> list[str]:
        # prefix-free labels: string order is left-to-right tree order
        return sorted(self._leaves)

    @property
    def nodes(self) -> list[str]:
        return list(self._nodes)

    @property
    def depth(self) -> int:
        return max((len(x) for x in self._leaves), default=0)

    def is_leaf(self, x: str) -> bool:
        return x in self._leaves

    def children(self, x: str) -> tuple:
        if x in self._leaves:
            return ()
        return (x + "0", x + "1")

    def members(self, x: str) -> np.ndarray:
        if x in self._leaves:
            return self._leaves[x]
        parts = [v for y, v in self._leaves.items() if y.startswith(x)]
        if not parts:
            raise KeyError(x)
        return np.sort(np.concatenate(parts))

    def balanced_to(self) -> int:
        """Largest q such that every leaf has depth >= q."""
        return min((len(x) for x in self._leaves), default=0)

    def labeling(self) -> Labeling:
        names = self.leaves
        assign = np.empty(self.n, dtype=np.int64)
        for k, x in enumerate(names):
            assign[self._leaves[x]] = k
        return Labeling(assign, tuple(names))

    def is_isomorphic(self, other: "CommunityTree") -> bool:
        """Same shape and same member sets, allowing sibling swaps anywhere."""
        return _canon(self, "") == _canon(other, "")

    # -- serialization
    def to_dict(self, ids: Sequence | None = None, label: str = "") -> dict:
        if label in self._leaves:
            mem = self._leaves[label].tolist()
            if ids is not None:
                mem = [ids[i] for i in mem]
            return {"label": label, "members": mem}
        return {"label": label,
                "children": [self.to_dict(ids, c) for c in self.children(label)]}

    def to_json(self, ids: Sequence | None = None) -> str:
        return json.dumps(self.to_dict(ids))

    @classmethod
    def from_dict(cls, obj: dict, n: int | None = None) -> "CommunityTree":
        leaves = {}
        stack = [obj]
        while stack:
            node = stack.pop()
            if "members" in node:
                leaves[node["label"]] = node["members"]
            else:
                stack.extend(node["children"])
        return cls(leaves, n)

    @classmethod
    def from_labels(cls, names: Sequence[str]) -> "CommunityTree":
        """Tree whose leaf for node ``i`` is ``names[i]``."""
        groups: dict = {}
        for i, x in enumerate(names):
            groups.setdefault(x, []).append(i)
        return cls(groups, len(names))

    def __repr__(self):
        return f"CommunityTree(n={self.n}, leaves={len(self._leaves)}, depth={self.depth})"


def _canon(tree: CommunityTree, x: str):
    if tree.is_leaf(x):
        return ("leaf", tuple(tree.members(x).tolist()))
    a, b = (_canon(tree, c) for c in tree.children(x))
    return ("node",) + tuple(sorted((a, b)))


def mega_labels(tree: CommunityTree, q: int) -> Labeling:
    """Partition by length-``q`` label prefixes."""
    if q < 0:
        raise ValueError("level must be non-negative")
    short = [x for x in tree.leaves if len(x) < q]
    if short:
        raise ValueError(f"tree not balanced to level {q}: branch {short[0]!r} ends early")
    prefixes = sorted({x[:q] for x in tree.leaves})
    pos = {x: k for k, x in enumerate(prefixes)}
    assign = np.empty(tree.n, dtype=np.int64)
    for x in tree.leaves:
        assign[tree.members(x)] = pos[x[:q]]
    return Labeling(assign, tuple(prefixes))


# ---------------------------------------------------------------------------
# probabilities


def connection_prob(params: BtsbmParams, x: str, y: str) -> float:
    if len(x) != params.d or len(y) != params.d:
        raise ValueError(f"labels must have length d={params.d}")
    return params.p[tree_distance(x, y, params.d)]


def build_B(params: BtsbmParams) -> np.ndarray:
    """Leaf-by-leaf probability matrix in block order."""
    L = params.leaves
    K = len(L)
    B = np.empty((K, K))
    for a in range(K):
        for b in range(K):
            B[a, b] = params.p[tree_distance(L[a], L[b], params.d)]
    return B


def membership(params: BtsbmParams) -> np.ndarray:
    """Block index of every node; nodes are laid out block by block."""
    return np.repeat(np.arange(params.K), params.block_sizes)


def population_matrix(params: BtsbmParams, zero_diagonal: bool = False) -> np.ndarray:
    """Dense ``Z B Z^T`` (or ``P = ZBZ^T - diag`` with ``zero_diagonal``)."""
    z = membership(params)
    P = build_B(params)[np.ix_(z, z)]
    if zero_diagonal:
        np.fill_diagonal(P, 0.0)
    return P


def population_tree(params: BtsbmParams) -> CommunityTree:
    offs = np.concatenate(([0], np.cumsum(params.block_sizes)))
    leaves = {x: np.arange(offs[k], offs[k + 1]) for k, x in enumerate(params.leaves)}
    return CommunityTree(leaves, params.n)


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; the same seed gives the same stream everywhere."""
    return np.random.Generator(np.random.Philox(seed))


_PAIRS_PER_CHUNK = 1 << 22


def sample_adjacency(params: BtsbmParams, seed) -> tuple:
    """Draw ``A`` with independent Bernoulli(B[c(i), c(j)]) edges for i < j.

    One uniform per pair is consumed in row-major (i<j) order, so the
    result is a pure function of the seed.  Returns the graph, the true
    leaf labeling and the population tree.
    """
    n = params.n
    if n < 2:
        raise ValueError("need at least two nodes")
    B = build_B(params)
    z = membership(params)
    rng = make_rng(seed)
    rows_out, cols_out = [], []
    i = 0
    while i < n - 1:
        # grow the row block until it holds about _PAIRS_PER_CHUNK pairs
        j, pairs = i, 0
        while j < n - 1 and (pairs == 0 or pairs + (n - 1 - j) <= _PAIRS_PER_CHUNK):
            pairs += n - 1 - j
            j += 1
        u = rng.random(pairs)
        r, c = _kernels.sample_rows(i, j, n, z, B, u)
        rows_out.append(np.asarray(r))
        cols_out.append(np.asarray(c))
        i = j
    g = Graph.from_edges(n, np.concatenate(rows_out), np.concatenate(cols_out))
    tree = population_tree(params)
    return g, tree.labeling(), tree


# ---------------------------------------------------------------------------
# closed-form spectra (equal block sizes only)


def _require_equal(params: BtsbmParams) -> None:
    if not params.equal_blocks:
        raise ValueError("closed-form spectrum needs a balanced tree with equal block sizes")


def analytic_eigenvalues(params: BtsbmParams, m: int | None = None) -> np.ndarray:
    """Distinct nonzero eigenvalues of ``Z B Z^T``: lambda_1, then q = 1..d order."""
    _require_equal(params)
    m = params.block_sizes[0] if m is None else m
    p, d = params.p, params.d
    # tail[k] = p_0 + sum_{r=1}^{k} 2^{r-1} p_r
    tail = [p[0]]
    for r in range(1, d + 1):
        tail.append(tail[-1] + 2 ** (r - 1) * p[r])
    lam = [m * tail[d]]
    for q in range(1, d + 1):
        lam.append(m * (tail[d - q] - 2 ** (d - q) * p[d - q + 1]))
    return np.array(lam)


def eigenvalue_multiplicities(d: int) -> np.ndarray:
    """1 for lambda_1, 2**(q-1) for lambda_{q+1}."""
    return np.array([1] + [2 ** (q - 1) for q in range(1, d + 1)])


def sort_by_magnitude(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    order = np.lexsort((-v, -np.abs(v)))
    return v[order]


def analytic_second_eigvec(params: BtsbmParams, n: int | None = None) -> np.ndarray:
    """The +-1/sqrt(n) vector separating the two level-1 mega-communities."""
    _require_equal(params)
    if not (params.assortative or params.disassortative):
        raise ValueError("second eigenvector is only guaranteed unique for (dis-)assortative p")
    n = params.n if n is None else n
    if n % 2:
        raise ValueError("n must be even")
    u = np.ones(n) / np.sqrt(n)
    u[n // 2:] *= -1
    return u


def second_eigengap(params: BtsbmParams) -> float:
    """Gap between the second eigenvalue of ``Z B Z^T`` and the rest of its spectrum."""
    _require_equal(params)
    n, p, d = params.n, params.p, params.d
    if params.assortative:
        return n * min(p[d], (p[d - 1] - p[d]) / 2)
    if params.disassortative:
        return n * (p[d] - p[d - 1]) / 2
    raise ValueError("gap formula needs (dis-)assortative p")


def hadamard_eigenbasis(d: int) -> tuple:
    """Orthonormal eigenbasis of every depth-``d`` B and its eigenvalue slots.

    Returns ``(U, slots)`` with ``U = H_K / 2**(d/2)`` (Sylvester order) and
    ``slots[i]`` the index q of the eigenvalue ``lambda_{d,q}`` sitting at
    column i, i.e. ``B = U diag(lam[slots]) U`` with ``lam`` ordered as
    :func:`analytic_eigenvalues` returns it.
    """
    if d < 1:
        raise ValueError("depth must be at least 1")
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    U = h
    for _ in range(d - 1):
        U = np.kron(U, h)
    K = 2**d
    slots = np.zeros(K, dtype=np.int64)
    for i in range(2, K + 1):
        v = i - 1
        ord2 = (v & -v).bit_length() - 1
        slots[i - 1] = d - ord2
    return U, slots
