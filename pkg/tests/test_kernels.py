"""The compiled kernels and their numpy twins must agree exactly."""
import os
import subprocess
import sys

import numpy as np
import pytest

from hcdtree import _kernels as K
from hcdtree.graph import Graph
from oracles import random_er

pytestmark = pytest.mark.skipif(not K.HAS_NUMBA, reason="numba not installed")


def _graph(seed, n=80, p=0.06):
    return Graph.from_dense(random_er(np.random.default_rng(seed), n, p))


@pytest.mark.parametrize("seed", range(5))
def test_matvec_and_matmat_agree(seed):
    g = _graph(seed)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(g.n)
    X = rng.standard_normal((g.n, 4))
    assert np.allclose(K.csr_matvec_numba(g.indptr, g.indices, x),
                       K.csr_matvec_numpy(g.indptr, g.indices, x), rtol=0, atol=1e-12)
    assert np.allclose(K.csr_matmat_numba(g.indptr, g.indices, X),
                       K.csr_matmat_numpy(g.indptr, g.indices, X), rtol=0, atol=1e-12)


def test_sample_rows_agree():
    rng = np.random.default_rng(0)
    n = 40
    block_of = rng.integers(0, 3, n)
    B = rng.uniform(0, 1, (3, 3))
    B = (B + B.T) / 2
    for start, stop in [(0, n), (5, 17), (38, 40)]:
        m = sum(n - 1 - i for i in range(start, stop))
        u = rng.random(m)
        a = K.sample_rows_numba(start, stop, n, block_of, B, u)
        b = K.sample_rows_numpy(start, stop, n, block_of, B, u)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.parametrize("k", [0, 1, 2, 3, 5])
def test_core_mask_agrees(k):
    g = _graph(k + 10, 60, 0.07)
    assert np.array_equal(K.core_mask_numba(g.indptr, g.indices, k),
                          K.core_mask_numpy(g.indptr, g.indices, k))


@pytest.mark.parametrize("seed", range(4))
def test_component_labels_agree(seed):
    g = _graph(seed, 70, 0.025)
    assert np.array_equal(K.component_labels_numba(g.indptr, g.indices),
                          K.component_labels_numpy(g.indptr, g.indices))


def test_assign_agrees():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((100, 3))
    C = rng.standard_normal((5, 3))
    la, da = K.assign_numba(X, C)
    lb, db = K.assign_numpy(X, C)
    assert np.array_equal(la, lb) and np.allclose(da, db)


def test_backend_flag_selects_numpy():
    code = "from hcdtree import _kernels as k; print(k.BACKEND)"
    env = dict(os.environ, HCDTREE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"
    env["HCDTREE_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numba"


def test_backends_give_identical_detection():
    code = ("import json; from hcdtree.btsbm import BtsbmParams, sample_adjacency;"
            "from hcdtree.hcd import hcd_spec;"
            "p = BtsbmParams.balanced(2, (0.3, 0.08, 0.02), 60);"
            "g, _, _ = sample_adjacency(p, 3); r = hcd_spec(g, seed=3);"
            "print(g.n_edges, r.labels.node_names())")
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, HCDTREE_DISABLE_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                   text=True, check=True).stdout)
    assert outs[0] == outs[1]
