"""Lloyd's k-means with k-means++ seeding and restarts."""
from __future__ import annotations

import numpy as np

from .. import _kernels
from ..btsbm import Labeling


class NoSeparationError(ValueError):
    pass


def kmeans_pp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = min(int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right")), n - 1)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def lloyd(X, centers, max_iter=100):
    """Run Lloyd iterations; returns labels, centers and the objective after each assignment."""
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        new, dist = _kernels.assign(X, centers)
        new = np.asarray(new)
        counts = np.bincount(new, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # move empty centres onto the worst-served points, then reassign
            far = np.argsort(-dist, kind="stable")[:empty.size]
            centers = centers.copy()
            centers[empty] = X[far]
            new, dist = _kernels.assign(X, centers)
            new = np.asarray(new)
            counts = np.bincount(new, minlength=k)
        history.append(float(np.sum(dist)))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        nz = counts > 0
        centers = centers.copy()
        centers[nz] = sums[nz] / counts[nz, None]
    return labels, centers, history


def _canonical(labels):
    """Renumber clusters in order of first appearance."""
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(labels.max() + 1, dtype=np.int64)
    remap[np.unique(labels)[order]] = np.arange(order.size)
    return remap[labels]


def kmeans(rows, K: int, seed=0, *, restarts: int = 10, max_iter: int = 100) -> Labeling:
    X = np.ascontiguousarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, {n}]")
    if K == 1:
        return Labeling(np.zeros(n, dtype=np.int64))
    if np.unique(X, axis=0).shape[0] < K:
        raise NoSeparationError(f"fewer than {K} distinct rows: no separation")
    rng = np.random.Generator(np.random.Philox(seed))
    best, best_obj = None, np.inf
    for _ in range(restarts):
        labels, _, hist = lloyd(X, kmeans_pp(X, K, rng), max_iter)
        if hist[-1] < best_obj:
            best, best_obj = labels, hist[-1]
    return Labeling(_canonical(best))


def kmeans2(rows, seed=0, **kw) -> Labeling:
    return kmeans(rows, 2, seed, **kw)
