"""Simulation models: BTSBM parameters from degree/out-in targets, canned trees."""
from __future__ import annotations

import numpy as np

from .btsbm import BtsbmParams, build_B


class InfeasibleTargetError(ValueError):
    pass


def _bisect(f, lo, hi, tol=1e-13, max_iter=200):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def expected_degree(params: BtsbmParams) -> float:
    """Mean over nodes of the expected degree (row sums of P, zero diagonal)."""
    B = build_B(params)
    s = np.asarray(params.block_sizes, dtype=float)
    row = B @ s - np.diag(B)
    return float(row @ s / s.sum())


def out_in_ratio(params: BtsbmParams, level: int | None = None) -> float:
    """Expected between-group edges over expected within-group edges.

    Groups are the leaf blocks by default, or the level-``level``
    mega-communities (label prefixes of that length).
    """
    B = build_B(params)
    s = np.asarray(params.block_sizes, dtype=float)
    W = B * np.outer(s, s)
    np.fill_diagonal(W, np.diag(B) * s * (s - 1))       # ordered pairs, no self-pairs
    if level is None:
        same = np.eye(len(s), dtype=bool)
    else:
        if any(len(x) < level for x in params.leaves):
            raise ValueError(f"tree not balanced to level {level}")
        pre = [x[:level] for x in params.leaves]
        same = np.array([[a == b for b in pre] for a in pre])
    within = W[same].sum()
    return float(W[~same].sum() / within)


def _weights(d, profile, x):
    r = np.arange(1, d + 1)
    if profile == "geometric":
        return x ** r
    return 1.0 - x * r


def derive_model_params(K: int, n: int, target_avg_degree: float, out_in: float | None = 0.15,
                        profile: str = "geometric", ratio_level: str = "leaf") -> BtsbmParams:
    """Balanced BTSBM hitting an average degree and an out-in ratio.

    ``geometric`` uses ``p_r = rho * beta**r``; ``arithmetic`` uses
    ``p_r = rho * (1 - delta * r)``.  The shape parameter is found by
    bisection on the out-in ratio, then ``rho`` is fixed by the degree.
    With ``arithmetic`` and ``out_in=None``, ``delta = 1/(d+1)``.

    ``ratio_level="leaf"`` measures the ratio between leaf communities;
    ``"root"`` measures it across the first split (the two level-1
    mega-communities), which leaves much weaker signal at the leaves.
    """
    d = int(round(np.log2(K)))
    if K < 1 or 2**d != K:
        raise ValueError("K must be a power of two")
    if n % K:
        raise ValueError("n must be divisible by K")
    m = n // K
    if m < 2:
        raise ValueError("need at least two nodes per block")
    if profile not in ("geometric", "arithmetic"):
        raise ValueError(f"unknown profile {profile!r}")
    if ratio_level not in ("leaf", "root"):
        raise ValueError(f"ratio_level must be 'leaf' or 'root', not {ratio_level!r}")
    mult = np.array([2.0 ** (r - 1) for r in range(1, d + 1)])

    def ratio(x):
        if ratio_level == "root":
            # scale-free, so rho = 1 will do
            p = np.concatenate(([1.0], _weights(d, profile, x)))
            return out_in_ratio(BtsbmParams(d, tuple(p), (m,) * K), level=1)
        return m * float(mult @ _weights(d, profile, x)) / (m - 1)

    if d == 0:
        shape = 0.0
        if out_in not in (None, 0, 0.0):
            raise InfeasibleTargetError("a single block has out-in ratio 0")
    elif profile == "arithmetic" and out_in is None:
        shape = 1.0 / (d + 1)
    else:
        if out_in is None or out_in <= 0:
            raise InfeasibleTargetError("out-in ratio target must be positive")
        if profile == "geometric":
            lo, hi = 0.0, 1.0
            while ratio(hi) < out_in and hi < 1e6:
                hi *= 2
        else:
            lo, hi = 0.0, 1.0 / d
        rlo, rhi = sorted((ratio(lo), ratio(hi)))
        if not rlo <= out_in <= rhi:
            raise InfeasibleTargetError(
                f"out-in ratio {out_in} outside attainable range [{rlo:.6g}, {rhi:.6g}]")
        shape = _bisect(lambda x: ratio(x) - out_in, lo, hi)
    a = _weights(d, profile, shape) if d else np.zeros(0)
    # degree = rho * [(m - 1) + m * sum 2^{r-1} a_r]
    unit = (m - 1) + m * float(mult @ a) if d else (m - 1)
    rho = target_avg_degree / unit
    p = rho * np.concatenate(([1.0], a))
    if p.max() > 1 or p.min() < 0:
        raise InfeasibleTargetError(
            f"degree {target_avg_degree} needs probabilities outside [0,1] "
            f"(max attainable degree {unit / max(1.0, float(np.max(np.concatenate(([1.0], a))))):.6g})")
    return BtsbmParams(d, tuple(p), (m,) * K)


def planted_partition(K: int, n: int, target_avg_degree: float, out_in: float = 0.15) -> BtsbmParams:
    """Flat SBM (within ``p``, between ``beta*p``) expressed as a BTSBM with p_1 = ... = p_d."""
    d = int(round(np.log2(K)))
    if 2**d != K or n % K:
        raise ValueError("K must be a power of two dividing n")
    m = n // K
    # ratio = m (K-1) beta / (m-1)
    beta = out_in * (m - 1) / (m * (K - 1)) if K > 1 else 0.0
    p = target_avg_degree / ((m - 1) + m * (K - 1) * beta)
    if p > 1 or beta * p > 1:
        raise InfeasibleTargetError("degree target needs probabilities above 1")
    return BtsbmParams(d, (p,) + (beta * p,) * d, (m,) * K)


def merge_leaves(params: BtsbmParams, prefixes) -> BtsbmParams:
    """Collapse every subtree under each prefix into a single leaf."""
    prefixes = list(prefixes)
    leaves, sizes = [], []
    done = set()
    for x, s in zip(params.leaves, params.block_sizes):
        hit = [q for q in prefixes if x.startswith(q)]
        if len(hit) > 1:
            raise ValueError(f"overlapping merge prefixes {hit}")
        if hit:
            q = hit[0]
            if q in done:
                sizes[leaves.index(q)] += s
            else:
                done.add(q)
                leaves.append(q)
                sizes.append(s)
        else:
            leaves.append(x)
            sizes.append(s)
    return BtsbmParams(params.d, params.p, tuple(sizes), tuple(leaves))


# Example trees: both start from a balanced 32-leaf model with 100 nodes per leaf.
UNBALANCED_MERGES = {
    # 4 sibling pairs merged: 4 leaves of 200 and 24 of 100 (K = 28)
    "example1": ["0000", "0110", "1001", "1111"],
    # two depth-2 subtrees (800 each) and two sibling pairs (200 each): K = 16
    "example2": ["00", "11", "0100", "1011"],
}


def unbalanced_example(name: str, n: int = 3200, avg_degree: float = 35.0,
                       out_in: float = 0.15, ratio_level: str = "root") -> BtsbmParams:
    """Merged-leaf example built on a balanced 32-leaf model.

    The base model's out-in ratio is measured across the root split by
    default: measured between leaves, 0.15 makes the merged blocks dominate
    the spectrum so that not even the population matrix splits along the tree.
    """
    if name not in UNBALANCED_MERGES:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(UNBALANCED_MERGES)}")
    base = derive_model_params(32, n, avg_degree, out_in, ratio_level=ratio_level)
    params = merge_leaves(base, UNBALANCED_MERGES[name])
    # re-scale so the realized expected degree matches the target on the merged tree
    scale = avg_degree / expected_degree(params)
    return BtsbmParams(params.d, tuple(v * scale for v in params.p), params.block_sizes,
                       params.leaves)

