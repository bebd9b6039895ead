"""Cost-weighted accuracy and the high/low-cost error decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, stratified_kfold_indices
from .errors import DataError
from .tree import ObliqueTree

HIGH_COST_THRESHOLD_BPS = 200.0


def predictions(tree: ObliqueTree, ds: Dataset) -> np.ndarray:
    """Labels for every sample, honoring the feature-space convention:
    a standardized dataset is already in model space, a raw one is scaled
    by the tree's own scaler (if any)."""
    if ds.scaler is not None:
        return tree.predict_model(ds.X)
    return tree.predict_many(ds.X)


def cwa(tree: ObliqueTree, ds: Dataset) -> float:
    """Cost-weighted accuracy in percent: correct cost share of total cost."""
    pred = predictions(tree, ds)
    return 100.0 * float(np.sum(ds.c[pred == ds.y])) / float(np.sum(ds.c))


@dataclass
class ErrorBreakdown:
    n_high: int
    n_low: int
    loss_high: float
    loss_low: float
    threshold: float = HIGH_COST_THRESHOLD_BPS

    @property
    def total_loss(self) -> float:
        return self.loss_high + self.loss_low

    @property
    def n_errors(self) -> int:
        return self.n_high + self.n_low


def error_breakdown(tree: ObliqueTree, ds: Dataset,
                    threshold: float = HIGH_COST_THRESHOLD_BPS) -> ErrorBreakdown:
    """Partition misclassified samples into low-cost (c <= threshold) and
    high-cost (c > threshold) buckets with their summed losses."""
    pred = predictions(tree, ds)
    err_cost = ds.c[pred != ds.y]
    high = err_cost > threshold
    return ErrorBreakdown(
        n_high=int(np.sum(high)),
        n_low=int(np.sum(~high)),
        loss_high=float(np.sum(err_cost[high])),
        loss_low=float(np.sum(err_cost[~high])),
        threshold=threshold,
    )


@dataclass
class KFoldResult:
    train_cwa: np.ndarray
    test_cwa: np.ndarray
    depths: np.ndarray
    leaves: np.ndarray

    @property
    def k(self) -> int:
        return len(self.test_cwa)

    def _mean_std(self, arr):
        std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
        return float(np.mean(arr)), std

    @property
    def train_mean_std(self):
        return self._mean_std(self.train_cwa)

    @property
    def test_mean_std(self):
        return self._mean_std(self.test_cwa)

    @property
    def depth_mean(self) -> float:
        return float(np.mean(self.depths))

    @property
    def leaves_mean(self) -> float:
        return float(np.mean(self.leaves))


def kfold_cwa(ds: Dataset, trainer, k: int = 5, seed: int = 0) -> KFoldResult:
    """Stratified k-fold evaluation of a trainer callable Dataset -> tree.

    Reports per-fold train/test CWA plus tree size stats; mean and sample
    (n-1) stddev are exposed on the result. k == N (leave-one-out) is
    allowed as a boundary case; otherwise each class needs >= k samples.
    """
    if k < 2:
        raise DataError("k must be >= 2")
    if k > ds.n:
        raise DataError(f"k={k} exceeds dataset size {ds.n}")
    if k != ds.n:
        for cls in (0, 1):
            count = int(np.sum(ds.y == cls))
            if 0 < count < k:
                raise DataError(f"class {cls} has {count} samples, fewer than k={k}")
    folds = stratified_kfold_indices(ds, k, seed)
    all_idx = np.arange(ds.n)
    train_cwa, test_cwa, depths, leaves = [], [], [], []
    for fold in folds:
        mask = np.ones(ds.n, dtype=bool)
        mask[fold] = False
        train_ds = ds.subset(all_idx[mask])
        test_ds = ds.subset(fold)
        model = trainer(train_ds)
        train_cwa.append(cwa(model, train_ds))
        test_cwa.append(cwa(model, test_ds))
        depths.append(model.depth)
        leaves.append(model.n_leaves())
    return KFoldResult(np.array(train_cwa), np.array(test_cwa),
                       np.array(depths), np.array(leaves))
