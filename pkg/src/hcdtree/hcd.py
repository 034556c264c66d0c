"""Recursive bi-partitioning with pluggable splitters and stopping rules."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .btsbm import CommunityTree, Labeling
from .graph import Graph, induced_subgraph
from .linalg import (LinearOperator, NonConvergenceError, NoSeparationError, adjacency_op,
                     arnoldi_rightmost, dense_op, kmeans, kmeans2, lanczos_extreme,
                     nb_norm_estimate, nb_operator, regularized_laplacian_op)

# spawn-key slots for the per-node random streams; path bits use 0 and 1
_SPLIT_STREAM, _KMEANS_STREAM, _NB_STREAM = 2, 3, 4


class DegenerateSplitError(RuntimeError):
    pass


def node_seed(seed, path: str = "", stream: int | None = None) -> np.random.SeedSequence:
    """Child seeds are a pure function of the master seed and the tree path."""
    key = tuple(int(b) for b in path)
    if stream is not None:
        key += (stream,)
    return np.random.SeedSequence(seed, spawn_key=key)


# ---------------------------------------------------------------------------
# splitters


@dataclass(frozen=True)
class Splitter:
    kind: str = "rsc"
    tau: float = 0.1

    def __post_init__(self):
        if self.kind not in ("sign", "rsc"):
            raise ValueError(f"unknown splitter {self.kind!r}")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")

    def split(self, g: Graph, seed=0, tol=1e-8) -> "Bipartition":
        if self.kind == "sign":
            return sign_split(g, seed=seed, tol=tol)
        return rsc_split(g, self.tau, seed=seed, tol=tol)


@dataclass(frozen=True)
class Bipartition:
    side: np.ndarray                   # 0/1 per vertex
    eigenvalues: tuple
    matvecs: int
    visits: int

    @property
    def groups(self) -> tuple:
        return np.flatnonzero(self.side == 0), np.flatnonzero(self.side == 1)


def _as_operator(g) -> LinearOperator:
    if isinstance(g, Graph):
        return adjacency_op(g)
    if isinstance(g, LinearOperator):
        return g
    return dense_op(g)


def sign_split(g, seed=0, tol=1e-8) -> Bipartition:
    """Split by the sign of the eigenvector whose eigenvalue is second in magnitude.

    ``g`` may be a :class:`Graph`, a symmetric operator or a dense matrix
    (e.g. an explicit population matrix).  The eigenvector is flipped so its
    first clearly nonzero entry is positive; nonnegative entries go to side 0.
    """
    op = _as_operator(g)
    if op.dim < 2:
        raise ValueError("need at least two vertices")
    mv, vi = op.matvecs, op.visits
    k = min(3, op.dim)
    pairs = lanczos_extreme(op, k, tol, which="LM", seed=seed)
    u = pairs[1].vector
    big = np.flatnonzero(np.abs(u) > 1e-12 * np.abs(u).max())
    if u[big[0]] < 0:
        u = -u
    # entries at rounding level count as zero, i.e. side 0
    side = (u < -1e-12 * np.abs(u).max()).astype(np.int64)
    if side.all() or not side.any():
        raise DegenerateSplitError("all eigenvector entries share one sign")
    return Bipartition(side, tuple(p.value for p in pairs), op.matvecs - mv, op.visits - vi)


def rsc_split(g: Graph, tau: float = 0.1, seed=0, tol=1e-8) -> Bipartition:
    """2-means on the rows of the two leading eigenvectors of ``L_tau``."""
    if g.n < 2:
        raise ValueError("need at least two vertices")
    op = regularized_laplacian_op(g, tau)
    seeds = np.random.SeedSequence(seed).spawn(2) if not isinstance(
        seed, np.random.SeedSequence) else seed.spawn(2)
    pairs = lanczos_extreme(op, 2, tol, which="LA", seed=seeds[0])
    U = np.column_stack([p.vector for p in pairs])
    try:
        lab = kmeans2(U, seed=seeds[1])
    except NoSeparationError as exc:
        raise DegenerateSplitError(str(exc)) from exc
    # kmeans numbers clusters by first appearance, so vertex 0 lands on side 0
    return Bipartition(lab.assign, tuple(p.value for p in pairs), op.matvecs, op.visits)


# ---------------------------------------------------------------------------
# stopping rules


@dataclass
class StopDecision:
    stop: bool
    reason: str = ""
    info: dict = field(default_factory=dict)


def nb_stopping(g: Graph, seed=0, tol=1e-6, ncv=30, max_restarts=500) -> StopDecision:
    """Split iff the second-largest NB real part exceeds sqrt(sum d^2 / sum d - 1)."""
    if g.n_edges == 0 or g.n < 3:
        return StopDecision(True, "too-small", {})
    thr = float(np.sqrt(nb_norm_estimate(g)))
    op = nb_operator(g)
    try:
        rv = arnoldi_rightmost(op, 2, tol, ncv=ncv, max_restarts=max_restarts, seed=seed)
    except NonConvergenceError as exc:
        return StopDecision(True, "nb-nonconvergence",
                            {"threshold": thr, "residual": exc.residual, "matvecs": op.matvecs,
                             "visits": op.visits, "nb_failed": True})
    re = np.sort(rv.real)[::-1]
    info = {"threshold": thr, "nb_real": [float(v) for v in re], "matvecs": op.matvecs,
            "visits": op.visits}
    if re[1] > thr:
        return StopDecision(False, "", info)
    return StopDecision(True, "nb", info)


@dataclass(frozen=True)
class StoppingRule:
    """``non_backtracking``, ``fixed_depth``, ``min_size`` or ``composite``.

    A composite stops as soon as any member says stop.
    """

    kind: str = "non_backtracking"
    depth: int | None = None
    size: int | None = None
    members: tuple = ()
    nb_tol: float = 1e-6

    @classmethod
    def non_backtracking(cls, nb_tol: float = 1e-6):
        return cls("non_backtracking", nb_tol=nb_tol)

    @classmethod
    def fixed_depth(cls, depth: int):
        return cls("fixed_depth", depth=int(depth))

    @classmethod
    def min_size(cls, size: int):
        return cls("min_size", size=int(size))

    @classmethod
    def composite(cls, *rules):
        return cls("composite", members=tuple(rules))

    def decide(self, g: Graph, label: str, seed=0) -> StopDecision:
        if self.kind == "fixed_depth":
            return StopDecision(len(label) >= self.depth, "depth")
        if self.kind == "min_size":
            return StopDecision(g.n < self.size, "min-size")
        if self.kind == "non_backtracking":
            return nb_stopping(g, seed=seed, tol=self.nb_tol)
        if self.kind == "composite":
            info = {}
            for rule in self.members:
                dec = rule.decide(g, label, seed)
                info.update(dec.info)
                if dec.stop:
                    return StopDecision(True, dec.reason, info)
            return StopDecision(False, "", info)
        raise ValueError(f"unknown stopping rule {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "StoppingRule":
        """``nb``, ``depth:3``, ``size:10`` or a ``+``-joined combination."""
        parts = [t.strip() for t in text.split("+") if t.strip()]
        rules = []
        for t in parts:
            name, _, arg = t.partition(":")
            if name in ("nb", "non_backtracking"):
                rules.append(cls.non_backtracking())
            elif name in ("depth", "fixed_depth"):
                rules.append(cls.fixed_depth(int(arg)))
            elif name in ("size", "min_size"):
                rules.append(cls.min_size(int(arg)))
            else:
                raise ValueError(f"unknown stopping rule {t!r}")
        if not rules:
            raise ValueError("empty stopping rule")
        return rules[0] if len(rules) == 1 else cls.composite(*rules)


# ---------------------------------------------------------------------------
# engine


@dataclass
class NodeDiagnostics:
    label: str
    size: int
    nnz: int
    leaf: bool
    stop_reason: str = ""
    eigenvalues: tuple = ()
    eigengap: float | None = None
    split_matvecs: int = 0
    split_visits: int = 0
    stop_matvecs: int = 0
    stop_visits: int = 0
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["eigenvalues"] = [float(v) for v in self.eigenvalues]
        return d


@dataclass
class HcdResult:
    labels: Labeling
    tree: CommunityTree
    diagnostics: dict

    @property
    def n_communities(self) -> int:
        return len(self.tree.leaves)

    def level_costs(self) -> list:
        """Per depth: summed subgraph nnz and summed eigensolver work."""
        out = {}
        for lab, dg in self.diagnostics.items():
            row = out.setdefault(len(lab), {"level": len(lab), "nnz": 0, "nodes": 0,
                                            "matvecs": 0, "visits": 0})
            row["nnz"] += dg.nnz
            row["nodes"] += 1
            row["matvecs"] += dg.split_matvecs + dg.stop_matvecs
            row["visits"] += dg.split_visits + dg.stop_visits
        return [out[k] for k in sorted(out)]

    def total_matvecs(self) -> int:
        return sum(d.split_matvecs + d.stop_matvecs for d in self.diagnostics.values())

    def total_visits(self) -> int:
        return sum(d.split_visits + d.stop_visits for d in self.diagnostics.values())

    def to_dict(self, ids=None) -> dict:
        names = self.labels.node_names()
        return {
            "labels": names if ids is None else dict(zip((str(i) for i in ids), names)),
            "n_communities": self.n_communities,
            "tree": self.tree.to_dict(ids),
            "diagnostics": {k: self.diagnostics[k].to_dict() for k in sorted(self.diagnostics)},
        }

    def to_json(self, ids=None, **kw) -> str:
        return json.dumps(self.to_dict(ids), **kw)


def recursive_partition(g: Graph, splitter: Splitter | None = None,
                        stopper: StoppingRule | None = None, *, min_size: int = 4,
                        seed: int = 0, tol: float = 1e-8) -> HcdResult:
    """Top-down bi-partitioning until the stopping rule (or a guard) fires.

    A node becomes a leaf when it has fewer than ``min_size`` vertices, no
    edges, the stopping rule says stop, or its split is degenerate.
    Children of a split are labelled by appending ``0``/``1`` to the
    parent's label.
    """
    if g.n == 0:
        raise ValueError("empty graph")
    splitter = Splitter() if splitter is None else splitter
    stopper = StoppingRule.non_backtracking() if stopper is None else stopper
    min_size = max(int(min_size), 2)

    leaves: dict = {}
    diags: dict = {}
    stack = [("", np.arange(g.n))]
    while stack:
        label, idx = stack.pop()
        sub = g if len(idx) == g.n else induced_subgraph(g, idx)
        dg = NodeDiagnostics(label, sub.n, sub.nnz, leaf=True)
        diags[label] = dg
        if sub.n < min_size:
            dg.stop_reason = "min-size"
        elif sub.n_edges == 0:
            dg.stop_reason = "edgeless"
        else:
            dec = stopper.decide(sub, label, seed=node_seed(seed, label, _NB_STREAM))
            dg.info.update(dec.info)
            dg.stop_matvecs = dec.info.get("matvecs", 0)
            dg.stop_visits = dec.info.get("visits", 0)
            if dec.stop:
                dg.stop_reason = dec.reason
            else:
                try:
                    bp = splitter.split(sub, seed=node_seed(seed, label, _SPLIT_STREAM), tol=tol)
                except (DegenerateSplitError, NonConvergenceError) as exc:
                    dg.stop_reason = "degenerate"
                    dg.info["error"] = str(exc)
                else:
                    dg.leaf = False
                    dg.eigenvalues = bp.eigenvalues
                    if len(bp.eigenvalues) >= 3:
                        a = np.abs(bp.eigenvalues)
                        dg.eigengap = float(a[1] - a[2])
                    elif len(bp.eigenvalues) == 2:
                        dg.eigengap = float(bp.eigenvalues[0] - bp.eigenvalues[1])
                    dg.split_matvecs = bp.matvecs
                    dg.split_visits = bp.visits
                    g0, g1 = bp.groups
                    # push the right child first so the left subtree is explored first
                    stack.append((label + "1", idx[g1]))
                    stack.append((label + "0", idx[g0]))
                    continue
        leaves[label] = idx
    tree = CommunityTree(leaves, g.n)
    return HcdResult(tree.labeling(), tree, diags)


def hcd_sign(g: Graph, stopper: StoppingRule | None = None, **kw) -> HcdResult:
    return recursive_partition(g, Splitter("sign"), stopper, **kw)


def hcd_spec(g: Graph, stopper: StoppingRule | None = None, tau: float = 0.1, **kw) -> HcdResult:
    return recursive_partition(g, Splitter("rsc", tau), stopper, **kw)


# ---------------------------------------------------------------------------
# baselines and post-processing


@dataclass
class KwayResult:
    labels: Labeling
    eigenvalues: tuple
    matvecs: int
    visits: int


def kway_rsc(g: Graph, K: int, tau: float = 0.1, seed=0, tol: float = 1e-8) -> KwayResult:
    """Regularized spectral clustering into K groups (leading-K eigenvectors of L_tau)."""
    if not 1 <= K <= g.n:
        raise ValueError(f"K must lie in [1, {g.n}]")
    if K == 1:
        return KwayResult(Labeling(np.zeros(g.n, dtype=np.int64)), (), 0, 0)
    op = regularized_laplacian_op(g, tau)
    s_eig, s_km = node_seed(seed, "", _SPLIT_STREAM), node_seed(seed, "", _KMEANS_STREAM)
    pairs = lanczos_extreme(op, K, tol, which="LA", seed=s_eig)
    U = np.column_stack([p.vector for p in pairs])
    lab = kmeans(U, K, seed=s_km)
    return KwayResult(lab, tuple(p.value for p in pairs), op.matvecs, op.visits)


@dataclass
class BlockModel:
    """Block-constant probability model: ``P[i, j] = B[assign[i], assign[j]]`` off the diagonal."""

    B: np.ndarray
    assign: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.B.shape[0])

    def dense(self) -> np.ndarray:
        P = self.B[np.ix_(self.assign, self.assign)]
        np.fill_diagonal(P, 0.0)
        return P


def fit_sbm(g: Graph, labels) -> BlockModel:
    """Maximum-likelihood block probabilities given a labeling."""
    z = np.asarray(labels.assign if isinstance(labels, Labeling) else labels, dtype=np.int64)
    if len(z) != g.n:
        raise ValueError("labels must cover every vertex")
    k = int(z.max()) + 1
    sizes = np.bincount(z, minlength=k)
    if np.any(sizes == 0):
        raise ValueError("empty block in labeling")
    e = g.edges()
    counts = np.zeros((k, k))
    np.add.at(counts, (z[e[:, 0]], z[e[:, 1]]), 1.0)
    counts = counts + counts.T - np.diag(np.diag(counts))
    pairs = np.outer(sizes, sizes).astype(float)
    np.fill_diagonal(pairs, sizes * (sizes - 1) / 2.0)
    B = np.divide(counts, pairs, out=np.zeros_like(counts), where=pairs > 0)
    return BlockModel(B, z)


def tree_from_probability_matrix(P, labels) -> CommunityTree:
    """Hierarchy over given communities by recursive sign splits of the block matrix.

    ``P`` is either the K x K block matrix or an n x n block-constant matrix.
    Each split uses the size-weighted matrix ``N^{1/2} B N^{1/2}``, which
    shares its nonzero spectrum and eigenvector signs with ``Z B Z^T``.
    Splits whose second eigenvalue ties in magnitude with the third are
    flagged in ``tree.diagnostics`` as ``non-unique``.
    """
    lab = labels if isinstance(labels, Labeling) else Labeling(labels)
    z = lab.assign
    k = lab.k
    sizes = np.bincount(z, minlength=k).astype(float)
    P = np.asarray(P, dtype=float)
    if P.shape == (k, k):
        B = P
    elif P.shape == (len(z), len(z)):
        rep = np.array([np.flatnonzero(z == c)[0] for c in range(k)])
        B = P[np.ix_(rep, rep)].copy()
        for c in range(k):
            mem = np.flatnonzero(z == c)
            B[c, c] = P[mem[0], mem[1]] if len(mem) > 1 else P[mem[0], mem[0]]
    else:
        raise ValueError("P must be K x K or n x n")

    diags = {}
    leaves = {}
    stack = [("", np.arange(k))]
    while stack:
        label, comms = stack.pop()
        if len(comms) == 1:
            leaves[label] = np.flatnonzero(z == comms[0])
            continue
        if len(comms) == 2:
            side = np.array([0, 1])
        else:
            w = np.sqrt(sizes[comms])
            M = w[:, None] * B[np.ix_(comms, comms)] * w[None, :]
            vals, vecs = np.linalg.eigh(M)
            order = np.lexsort((-vals, -np.abs(vals)))
            u = vecs[:, order[1]]
            a = np.abs(vals[order])
            if a[1] - a[2] <= 1e-9 * max(a[0], 1e-300):
                diags[label] = "non-unique"
            big = np.flatnonzero(np.abs(u) > 1e-12 * np.abs(u).max())
            if u[big[0]] < 0:
                u = -u
            side = (u < -1e-12 * np.abs(u).max()).astype(np.int64)
            if side.all() or not side.any():
                # no sign change: fall back to cutting the sorted entries in half
                diags[label] = "degenerate-sign"
                side = np.zeros(len(comms), dtype=np.int64)
                side[np.argsort(-u, kind="stable")[len(comms) // 2:]] = 1
        stack.append((label + "1", comms[side == 1]))
        stack.append((label + "0", comms[side == 0]))
    tree = CommunityTree(leaves, len(z))
    tree.diagnostics = diags
    return tree
