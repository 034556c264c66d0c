"""Thick-restart Lanczos with full reorthogonalization."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .operators import LinearOperator, adjacency_op, dense_op


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (best residual {residual:.3e})")
        self.residual = residual


class DegenerateGapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float


def _order(theta, which):
    if which == "LM":
        return np.lexsort((-theta, -np.abs(theta)))
    if which == "LA":
        return np.argsort(-theta, kind="stable")
    if which == "SA":
        return np.argsort(theta, kind="stable")
    raise ValueError(f"unknown selection {which!r}")


def _orthogonalize(V, w):
    """Two classical Gram-Schmidt passes against the columns of V."""
    h = V.T @ w
    w = w - V @ h
    h2 = V.T @ w
    w = w - V @ h2
    return w, h + h2


def _fresh_direction(rng, V, n):
    for _ in range(5):
        w, _ = _orthogonalize(V, rng.standard_normal(n))
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            return w / nrm
    raise RuntimeError("could not extend an orthonormal basis")


def lanczos_extreme(op, k: int, tol: float = 1e-8, max_iter: int = 500, *,
                    which: str = "LM", ncv: int | None = None, seed: int = 0) -> list:
    """The ``k`` extreme eigenpairs of a symmetric operator.

    ``which`` is ``"LM"`` (largest magnitude, ties broken toward larger
    value), ``"LA"`` (algebraically largest) or ``"SA"``.  ``max_iter``
    bounds the number of restart cycles.  Every returned pair has
    ``||Mv - lambda v|| <= tol`` measured directly on the operator.
    """
    if isinstance(op, np.ndarray):
        op = dense_op(op)
    n = op.dim
    if n < 1:
        raise ValueError("empty operator")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    if ncv is None:
        ncv = max(2 * k + 10, 20)
    ncv = min(ncv, n)
    rng = np.random.Generator(np.random.Philox(seed))

    V = np.zeros((n, ncv + 1))
    H = np.zeros((ncv + 1, ncv))
    v = rng.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    start = 0
    anorm = 0.0
    best = np.inf

    for _ in range(max_iter):
        for j in range(start, ncv):
            w = op.matvec(V[:, j])
            w, h = _orthogonalize(V[:, :j + 1], w)
            beta = np.linalg.norm(w)
            anorm = max(anorm, np.hypot(np.linalg.norm(h), beta))
            H[:j + 1, j] = h
            if j + 1 == n:
                H[j + 1, j] = 0.0
                break
            if beta <= 1e-12 * max(anorm, 1e-300):
                # invariant subspace found; continue with a new direction
                H[j + 1, j] = 0.0
                V[:, j + 1] = _fresh_direction(rng, V[:, :j + 1], n)
            else:
                H[j + 1, j] = beta
                V[:, j + 1] = w / beta
        m = ncv
        T = H[:m, :m]
        theta, S = np.linalg.eigh((T + T.T) / 2)
        order = _order(theta, which)
        tail = H[m, :m] @ S
        est = np.abs(tail[order[:k]])
        best = min(best, float(est.max()))
        if np.all(est <= tol):
            idx = order[:k]
            X = V[:, :m] @ S[:, idx]
            X /= np.linalg.norm(X, axis=0)
            R = op.matmat(X) - X * theta[idx]
            res = np.linalg.norm(R, axis=0)
            if np.all(res <= tol):
                return [EigenPair(float(theta[i]), X[:, c].copy(), float(res[c]))
                        for c, i in enumerate(idx)]
            best = min(best, float(res.max()))
        if m == n:
            # whole space spanned: Ritz pairs are exact up to rounding
            raise NonConvergenceError("residual tolerance unreachable in finite precision", best)
        keep = order[:min(max(k + (m - k) // 2, k + 1), m - 1)]
        p = len(keep)
        V[:, :p] = V[:, :m] @ S[:, keep]
        V[:, p] = V[:, m]
        H[:] = 0.0
        H[:p, :p] = np.diag(theta[keep])
        H[p, :p] = tail[keep]
        start = p
    raise NonConvergenceError(f"Lanczos did not converge in {max_iter} restarts", best)


def second_eigvec_adjacency(op, tol: float = 1e-8, seed: int = 0) -> EigenPair:
    """Eigenpair ranked second by |value|, taken from the top three.

    ``op`` may be a graph, an operator or a dense symmetric matrix.
    """
    if isinstance(op, np.ndarray):
        op = dense_op(op)
    elif not isinstance(op, LinearOperator):
        op = adjacency_op(op)
    k = min(3, op.dim)
    if k < 2:
        raise ValueError("need at least two vertices")
    pairs = lanczos_extreme(op, k, tol, which="LM", seed=seed)
    if k == 3 and abs(abs(pairs[1].value) - abs(pairs[2].value)) < 1e-12:
        warnings.warn("second and third eigenvalues tie in magnitude", DegenerateGapWarning,
                      stacklevel=2)
    return pairs[1]
