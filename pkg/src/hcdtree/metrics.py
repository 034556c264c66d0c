"""Evaluation measures: NMI, tree-similarity error, mega-community accuracy, P-hat error."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .btsbm import CommunityTree, Labeling, mega_labels, string_similarity
from .hcd import BlockModel


def _assign(x) -> np.ndarray:
    if isinstance(x, Labeling):
        return x.assign
    if isinstance(x, CommunityTree):
        return x.labeling().assign
    if hasattr(x, "labels"):
        return _assign(x.labels)
    a = np.asarray(x)
    if a.dtype.kind in "iu" and (a.size == 0 or a.min() >= 0):
        return a.astype(np.int64, copy=False)
    return Labeling.from_any(x).assign


def _tree(x) -> CommunityTree:
    if isinstance(x, CommunityTree):
        return x
    if hasattr(x, "tree"):
        return x.tree
    raise TypeError(f"expected a CommunityTree or a result carrying one, got {type(x).__name__}")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray      # rows: first labeling, columns: second

    @classmethod
    def of(cls, a, b) -> "ConfusionMatrix":
        a, b = _assign(a), _assign(b)
        if len(a) != len(b):
            raise ValueError(f"labelings cover different node sets ({len(a)} vs {len(b)})")
        ka = int(a.max()) + 1 if len(a) else 0
        kb = int(b.max()) + 1 if len(b) else 0
        c = np.zeros((ka, kb), dtype=np.int64)
        np.add.at(c, (a, b), 1)
        return cls(c)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def nmi(a, b) -> float:
    """2 I(a;b) / (H(a) + H(b)) in nats; two single-cluster labelings score 1."""
    c = ConfusionMatrix.of(a, b).counts.astype(float)
    n = c.sum()
    if n == 0:
        raise ValueError("empty labelings")
    pj = c / n
    pa, pb = pj.sum(axis=1), pj.sum(axis=0)
    ha, hb = _entropy(pa), _entropy(pb)
    if ha + hb == 0:
        return 1.0
    nz = pj > 0
    mi = float((pj[nz] * np.log(pj[nz] / np.outer(pa, pb)[nz])).sum())
    return min(max(2.0 * mi / (ha + hb), 0.0), 1.0)


def similarity_block_matrix(names) -> np.ndarray:
    """Pairwise string similarity between community labels (diagonal included)."""
    k = len(names)
    S = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            S[i, j] = S[j, i] = string_similarity(names[i], names[j])
    return S


def tree_similarity_error(est, truth) -> float:
    """||S_est - S_true||_F^2 / ||S_true||_F^2 over all node pairs.

    Computed from the joint community counts ``N[a, b]`` without building
    n x n matrices:  the cross term is ``sum((N^T S_est N) * S_true)``.
    """
    te, tt = _tree(est), _tree(truth)
    le, lt = te.labeling(), tt.labeling()
    N = ConfusionMatrix.of(le, lt).counts.astype(float)
    Se = similarity_block_matrix(le.names)
    St = similarity_block_matrix(lt.names)
    r, c = N.sum(axis=1), N.sum(axis=0)
    ee = r @ (Se ** 2) @ r
    tt2 = c @ (St ** 2) @ c
    cross = float(((N.T @ Se @ N) * St).sum())
    return max(float(ee + tt2 - 2.0 * cross), 0.0) / float(tt2)


def mega_accuracy(est, truth: CommunityTree, q: int) -> float:
    """Fraction of nodes in matched level-``q`` mega-communities under the best matching.

    If ``est`` stops above level ``q`` somewhere, its leaf labels are used.
    """
    te = _tree(est)
    truth_lab = mega_labels(truth, q)
    try:
        est_lab = mega_labels(te, q)
    except ValueError:
        est_lab = te.labeling()
    c = ConfusionMatrix.of(est_lab, truth_lab).counts
    rows, cols = linear_sum_assignment(c, maximize=True)
    return float(c[rows, cols].sum()) / c.sum()


def _frob_sq_offdiag(bm: BlockModel) -> float:
    s = bm.sizes.astype(float)
    return float(s @ (bm.B ** 2) @ s - np.sum(s * np.diag(bm.B) ** 2))


def prob_matrix_error(Phat, P) -> float:
    """||P_hat - P||_F^2 / ||P||_F^2 for zero-diagonal probability matrices.

    Two :class:`BlockModel` arguments are compared blockwise; anything else
    is treated as a dense matrix.
    """
    if isinstance(Phat, BlockModel) and isinstance(P, BlockModel):
        if len(Phat.assign) != len(P.assign):
            raise ValueError("models cover different node sets")
        N = ConfusionMatrix.of(Phat.assign, P.assign).counts.astype(float)
        ka, kb = Phat.B.shape[0], P.B.shape[0]
        N = np.pad(N, ((0, ka - N.shape[0]), (0, kb - N.shape[1])))
        den = _frob_sq_offdiag(P)
        if den == 0:
            raise ValueError("reference probability matrix is zero")
        cross = float(((N.T @ Phat.B @ N) * P.B).sum())
        cross -= float((N * np.outer(np.diag(Phat.B), np.diag(P.B))).sum())
        num = _frob_sq_offdiag(Phat) + den - 2.0 * cross
        return max(num, 0.0) / den
    A = Phat.dense() if isinstance(Phat, BlockModel) else np.asarray(Phat, dtype=float)
    B = P.dense() if isinstance(P, BlockModel) else np.asarray(P, dtype=float)
    if A.shape != B.shape:
        raise ValueError("matrices differ in shape")
    den = float((B ** 2).sum())
    if den == 0:
        raise ValueError("reference probability matrix is zero")
    return float(((A - B) ** 2).sum()) / den


def count_communities(result) -> int:
    return len(_tree(result).leaves)
