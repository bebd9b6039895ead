"""Shared builders for randomized tests. Everything is seed-deterministic."""

import numpy as np
import pytest

from radiosel.dataset import Dataset
from radiosel.tree import DecisionNode, LeafNode, ObliqueTree


def random_dataset(rng, n=60, dim=4, cost_scale=1000.0, separation=1.0):
    """Noisy linearly-flavored classification data with positive costs."""
    X = rng.normal(0.0, 1.0, size=(n, dim))
    w = rng.normal(0.0, 1.0, size=dim)
    score = X @ w + separation * rng.normal(0.0, 0.3, size=n)
    y = (score > 0).astype(int)
    if len(np.unique(y)) < 2:  # force both classes
        y[0], y[1] = 0, 1
    c = rng.uniform(1.0, cost_scale, size=n)
    return Dataset(X, y, c)


def random_tree(rng, dim=4, depth=2, zero_prob=0.0):
    """Complete random tree; with zero_prob, some hyperplanes are all-zero."""
    nodes = {}
    n_dec = 2 ** depth - 1
    for nid in range(n_dec):
        if zero_prob and rng.random() < zero_prob:
            w = np.zeros(dim)
        else:
            w = rng.normal(0.0, 1.0, size=dim)
        nodes[nid] = DecisionNode(w, float(rng.normal(0.0, 1.0)), 2 * nid + 1, 2 * nid + 2)
    for i in range(2 ** depth):
        nodes[n_dec + i] = LeafNode(int(rng.integers(0, 2)))
    return ObliqueTree(nodes, 0)


def leaf_tree(label):
    return ObliqueTree({0: LeafNode(label)}, 0)


def boundary_adjacent_inputs(tree, rng, per_node=50, eps_rel=1e-6):
    """Model-space points solving w.x + w0 = +-eps for every hyperplane."""
    rows = []
    for nid in tree.decision_ids():
        node = tree.nodes[nid]
        nrm2 = float(node.w @ node.w)
        scale = max(1.0, abs(node.w0))
        for _ in range(per_node):
            x = rng.normal(0.0, 2.0, size=node.w.shape[0])
            x = x - (float(node.w @ x) + node.w0) / nrm2 * node.w  # onto the plane
            for sign in (1.0, -1.0):
                rows.append(x + sign * eps_rel * scale * node.w / nrm2)
    return np.array(rows) if rows else np.empty((0, tree.dim or 4))


def stump(w, w0, left_label, right_label):
    return ObliqueTree({0: DecisionNode(np.asarray(w, dtype=float), w0, 1, 2),
                        1: LeafNode(left_label), 2: LeafNode(right_label)}, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
