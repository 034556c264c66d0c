import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcdtree.btsbm import BtsbmParams, CommunityTree, population_tree
from hcdtree.hcd import BlockModel
from hcdtree.metrics import (ConfusionMatrix, count_communities, mega_accuracy, nmi,
                             prob_matrix_error, tree_similarity_error)
from oracles import entropy_nats, mutual_info_nats, similarity_matrix


def _random_tree(rng, n, depth=3):
    """Random (possibly unbalanced) leaf set; every leaf gets at least one node."""
    leaves, stack = [], [""]
    while stack:
        x = stack.pop()
        if len(x) < depth and (x == "" or rng.random() < 0.7):
            stack += [x + "0", x + "1"]
        else:
            leaves.append(x)
    names = leaves + list(rng.choice(leaves, n - len(leaves)))
    rng.shuffle(names)
    return CommunityTree.from_labels(names)


def test_nmi_matches_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.integers(0, 4, 60)
        b = rng.integers(0, 5, 60)
        ref = 2 * mutual_info_nats(a, b) / (entropy_nats(a) + entropy_nats(b))
        assert nmi(a, b) == pytest.approx(ref, abs=1e-12)


def test_nmi_properties():
    a = np.array([0, 0, 1, 1, 2, 2])
    assert nmi(a, a) == pytest.approx(1.0)
    assert nmi(a, [5, 5, 3, 3, 9, 9]) == pytest.approx(1.0)
    assert nmi([0] * 4, [1] * 4) == 1.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        nmi([0, 1], [0, 1, 2])


def test_confusion_counts():
    c = ConfusionMatrix.of([0, 0, 1], [1, 1, 0])
    assert c.counts.tolist() == [[0, 2], [1, 0]] and c.n == 3


def test_similarity_error_matches_dense_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = 40
        t1, t2 = _random_tree(rng, n), _random_tree(rng, n)
        S1 = similarity_matrix(t1.labeling().node_names())
        S2 = similarity_matrix(t2.labeling().node_names())
        ref = ((S1 - S2) ** 2).sum() / (S2 ** 2).sum()
        assert tree_similarity_error(t1, t2) == pytest.approx(ref, abs=1e-12)
        assert tree_similarity_error(t2, t2) == 0.0


def test_similarity_error_is_invariant_to_sibling_swaps():
    a = CommunityTree({"00": [0, 1], "01": [2], "1": [3, 4]})
    b = CommunityTree({"0": [3, 4], "10": [2], "11": [0, 1]})
    assert tree_similarity_error(a, b) == 0.0


def test_mega_accuracy():
    truth = population_tree(BtsbmParams.balanced(2, (0.5, 0.2, 0.1), 3))
    assert mega_accuracy(truth, truth, 1) == 1.0
    assert mega_accuracy(truth, truth, 2) == 1.0
    # swapping level-1 labels does not matter
    swapped = CommunityTree({("1" if x[0] == "0" else "0") + x[1:]: truth.members(x)
                             for x in truth.leaves})
    assert mega_accuracy(swapped, truth, 1) == 1.0
    # one node moved across the root split
    names = truth.labeling().node_names()
    names[0] = "10"
    moved = CommunityTree.from_labels(names)
    assert mega_accuracy(moved, truth, 1) == pytest.approx(11 / 12)
    # an estimate that stopped at the root falls back to its leaf labels
    root = CommunityTree({"": np.arange(12)})
    assert mega_accuracy(root, truth, 1) == pytest.approx(0.5)


def test_prob_matrix_error_blockwise_matches_dense():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = 30
        za, zb = rng.integers(0, 3, n), rng.integers(0, 4, n)
        za[:3], zb[:4] = [0, 1, 2], [0, 1, 2, 3]
        Ba, Bb = rng.random((3, 3)), rng.random((4, 4))
        Ba, Bb = (Ba + Ba.T) / 2, (Bb + Bb.T) / 2
        A, B = BlockModel(Ba, za), BlockModel(Bb, zb)
        ref = ((A.dense() - B.dense()) ** 2).sum() / (B.dense() ** 2).sum()
        assert prob_matrix_error(A, B) == pytest.approx(ref, abs=1e-12)
        assert prob_matrix_error(A.dense(), B.dense()) == pytest.approx(ref, abs=1e-12)


def test_prob_matrix_error_rejects_zero_reference():
    with pytest.raises(ValueError):
        prob_matrix_error(np.ones((3, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        prob_matrix_error(np.ones((3, 3)), np.ones((2, 2)))


def test_count_communities():
    assert count_communities(CommunityTree({"0": [0], "1": [1]})) == 2
    with pytest.raises(TypeError):
        count_communities([0, 1])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=40),
       st.lists(st.integers(0, 3), min_size=2, max_size=40))
def test_nmi_is_symmetric_and_bounded(a, b):
    k = min(len(a), len(b))
    a, b = a[:k], b[:k]
    v = nmi(a, b)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(nmi(b, a), abs=1e-12)
