"""Warm-started retraining on growing data subsets and structural diffing.

Trains on the smallest fraction, then re-optimizes the converged tree on
each larger (nested) subset. Skeleton equality is the stability criterion;
per-node weight cosine similarity is a soft diagnostic only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics, tao
from .dataset import Dataset
from .errors import DataError
from .tree import DecisionNode, ObliqueTree


@dataclass
class StabilityStage:
    fraction: float
    n_samples: int
    signature: str
    objective: float
    test_error_pct: float
    depth: int
    n_leaves: int
    tree: ObliqueTree


@dataclass
class StabilityReport:
    fractions: list
    stages: list                      # StabilityStage per fraction
    pairwise_skeleton_equal: dict     # (fa, fb) -> bool
    cosine_similarity: dict           # (fa, fb) -> {node_id: cos(w_a, w_b)}
    test_error_monotone_nonincreasing: bool

    @property
    def all_signatures_equal(self) -> bool:
        return all(self.pairwise_skeleton_equal.values())


def _nested_subsets(ds: Dataset, fractions, seed: int) -> list[np.ndarray]:
    """One stratified shuffle; fraction f takes the first ceil(f * n_c) of
    each class, so smaller subsets are contained in larger ones."""
    rng = np.random.default_rng(seed)
    per_class = {}
    for cls in (0, 1):
        members = np.flatnonzero(ds.y == cls)
        per_class[cls] = members[rng.permutation(members.size)]
    subsets = []
    for f in fractions:
        take = []
        for cls in (0, 1):
            members = per_class[cls]
            k = int(np.ceil(f * members.size))
            if members.size and k == 0:
                raise DataError(f"fraction {f} leaves class {cls} empty")
            take.extend(members[:k].tolist())
        subsets.append(np.array(sorted(take), dtype=int))
    return subsets


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def stability_run(train_ds: Dataset, test_ds: Dataset, cfg: tao.TaoConfig,
                  fractions=(0.5, 0.75, 1.0), seed: int = 0) -> StabilityReport:
    """Chain of trainings on nested subsets, each warm-started from the
    previous converged tree; reports signatures, test errors, similarities.

    Whether the test error repeats the decreasing pattern seen on growing
    field data is reported, never asserted.
    """
    fractions = [float(f) for f in fractions]
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise DataError("fractions must be strictly increasing")
    if abs(fractions[-1] - 1.0) > 1e-12:
        raise DataError("last fraction must be 1.0")
    subsets = _nested_subsets(train_ds, fractions, seed)

    stages = []
    prev_tree = None
    for f, idx in zip(fractions, subsets):
        sub = train_ds.subset(idx)
        if len(np.unique(sub.y)) < 2:
            raise DataError(f"subset for fraction {f} has a single class")
        if prev_tree is None:
            result = tao.train(sub, cfg)
        else:
            result = tao.optimize_tree(prev_tree, sub, cfg)
        prev_tree = result.tree
        stages.append(StabilityStage(
            fraction=f,
            n_samples=sub.n,
            signature=result.tree.structural_signature(),
            objective=result.history[-1],
            test_error_pct=100.0 - metrics.cwa(result.tree, test_ds),
            depth=result.tree.depth,
            n_leaves=result.tree.n_leaves(),
            tree=result.tree,
        ))

    pairwise = {}
    cosines = {}
    for i in range(len(stages)):
        for j in range(i + 1, len(stages)):
            a, b = stages[i], stages[j]
            key = (a.fraction, b.fraction)
            pairwise[key] = a.signature == b.signature
            common = set(a.tree.nodes) & set(b.tree.nodes)
            sims = {}
            for nid in sorted(common):
                na, nb = a.tree.nodes[nid], b.tree.nodes[nid]
                if isinstance(na, DecisionNode) and isinstance(nb, DecisionNode):
                    sims[nid] = _cosine(na.w, nb.w)
            cosines[key] = sims

    errors = [s.test_error_pct for s in stages]
    monotone = all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    return StabilityReport(fractions, stages, pairwise, cosines, monotone)
