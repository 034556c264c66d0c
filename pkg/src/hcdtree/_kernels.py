"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature and the same
results.  The numba versions are used unless numba is missing or the
environment variable ``HCDTREE_DISABLE_NUMBA`` is set to a non-empty value
other than ``0``.  Both variants stay importable under explicit names
(``*_numba`` / ``*_numpy``) so tests and the benchmark can compare them.
"""
import os

import numpy as np

_flag = os.environ.get("HCDTREE_DISABLE_NUMBA", "")
_DISABLED = _flag not in ("", "0")

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# sparse mat-vec for an unweighted CSR pattern


def csr_matvec_numpy(indptr, indices, x):
    n = indptr.shape[0] - 1
    if indices.shape[0] == 0:
        return np.zeros(n)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=x[indices], minlength=n)


def csr_matmat_numpy(indptr, indices, X):
    n = indptr.shape[0] - 1
    out = np.zeros((n, X.shape[1]))
    if indices.shape[0] == 0:
        return out
    rows = np.repeat(np.arange(n), np.diff(indptr))
    np.add.at(out, rows, X[indices])
    return out


# ---------------------------------------------------------------------------
# Bernoulli edge sampling over i<j pairs of a row block


def sample_rows_numpy(row_start, row_stop, n, block_of, B, uniforms):
    """Edges (i, j), i<j, for rows in [row_start, row_stop).

    ``uniforms`` holds one draw per pair, in row-major (i<j) order.
    """
    counts = n - 1 - np.arange(row_start, row_stop)
    rows = np.repeat(np.arange(row_start, row_stop), counts)
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    cols = np.arange(rows.shape[0]) - np.repeat(offsets, counts) + rows + 1
    probs = B[block_of[rows], block_of[cols]]
    hit = uniforms < probs
    return rows[hit], cols[hit]


# ---------------------------------------------------------------------------
# k-core peeling and connected components


def core_mask_numpy(indptr, indices, k):
    n = indptr.shape[0] - 1
    deg = np.diff(indptr).astype(np.int64)
    alive = np.ones(n, dtype=np.bool_)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    while True:
        drop = alive & (deg < k)
        if not drop.any():
            return alive
        alive &= ~drop
        # every surviving neighbour of a dropped vertex loses one degree
        hit = drop[rows]
        np.subtract.at(deg, indices[hit], 1)


def component_labels_numpy(indptr, indices):
    """Label propagation to the minimum index; labels are component minima."""
    n = indptr.shape[0] - 1
    label = np.arange(n)
    if indices.shape[0] == 0:
        return label
    rows = np.repeat(np.arange(n), np.diff(indptr))
    while True:
        nbr_min = label.copy()
        np.minimum.at(nbr_min, rows, label[indices])
        if np.array_equal(nbr_min, label):
            return label
        # pointer jumping; label[v] <= v holds throughout
        label = nbr_min[nbr_min]


# ---------------------------------------------------------------------------
# k-means assignment step


def assign_numpy(X, centers):
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(X.shape[0]), labels]


if HAS_NUMBA:

    @njit(cache=True)
    def csr_matvec_numba(indptr, indices, x):
        n = indptr.shape[0] - 1
        y = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                acc += x[indices[p]]
            y[i] = acc
        return y

    @njit(cache=True)
    def csr_matmat_numba(indptr, indices, X):
        n = indptr.shape[0] - 1
        k = X.shape[1]
        out = np.zeros((n, k))
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                for c in range(k):
                    out[i, c] += X[j, c]
        return out

    @njit(cache=True)
    def sample_rows_numba(row_start, row_stop, n, block_of, B, uniforms):
        cap = 1024
        ri = np.empty(cap, dtype=np.int64)
        ci = np.empty(cap, dtype=np.int64)
        m = 0
        t = 0
        for i in range(row_start, row_stop):
            bi = block_of[i]
            for j in range(i + 1, n):
                if uniforms[t] < B[bi, block_of[j]]:
                    if m == cap:
                        cap *= 2
                        ri2 = np.empty(cap, dtype=np.int64)
                        ci2 = np.empty(cap, dtype=np.int64)
                        ri2[:m] = ri[:m]
                        ci2[:m] = ci[:m]
                        ri = ri2
                        ci = ci2
                    ri[m] = i
                    ci[m] = j
                    m += 1
                t += 1
        return ri[:m], ci[:m]

    @njit(cache=True)
    def core_mask_numba(indptr, indices, k):
        n = indptr.shape[0] - 1
        deg = np.empty(n, dtype=np.int64)
        for i in range(n):
            deg[i] = indptr[i + 1] - indptr[i]
        alive = np.ones(n, dtype=np.bool_)
        stack = np.empty(n, dtype=np.int64)
        top = 0
        for i in range(n):
            if deg[i] < k:
                alive[i] = False
                stack[top] = i
                top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for p in range(indptr[v], indptr[v + 1]):
                u = indices[p]
                if alive[u]:
                    deg[u] -= 1
                    if deg[u] < k:
                        alive[u] = False
                        stack[top] = u
                        top += 1
        return alive

    @njit(cache=True)
    def component_labels_numba(indptr, indices):
        n = indptr.shape[0] - 1
        label = -np.ones(n, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        for s in range(n):
            if label[s] >= 0:
                continue
            label[s] = s
            head = 0
            tail = 1
            queue[0] = s
            while head < tail:
                v = queue[head]
                head += 1
                for p in range(indptr[v], indptr[v + 1]):
                    u = indices[p]
                    if label[u] < 0:
                        label[u] = s
                        queue[tail] = u
                        tail += 1
        return label

    @njit(cache=True)
    def assign_numba(X, centers):
        n, dim = X.shape
        k = centers.shape[0]
        labels = np.empty(n, dtype=np.int64)
        best = np.empty(n)
        for i in range(n):
            bd = np.inf
            bl = 0
            for c in range(k):
                s = 0.0
                for t in range(dim):
                    diff = X[i, t] - centers[c, t]
                    s += diff * diff
                if s < bd:
                    bd = s
                    bl = c
            labels[i] = bl
            best[i] = bd
        return labels, best


if USE_NUMBA:
    csr_matvec = csr_matvec_numba
    csr_matmat = csr_matmat_numba
    sample_rows = sample_rows_numba
    core_mask = core_mask_numba
    component_labels = component_labels_numba
    assign = assign_numba
else:
    csr_matvec = csr_matvec_numpy
    csr_matmat = csr_matmat_numpy
    sample_rows = sample_rows_numpy
    core_mask = core_mask_numpy
    component_labels = component_labels_numpy
    assign = assign_numpy
