"""Alternating node-wise tree optimization with monotone objective decrease.

Each pass sweeps depth levels deepest-to-root. Nodes on one level have
disjoint reach sets (they are non-descendants of each other), so their
updates are independent: proposals for a level are computed from the same
tree state and applied afterwards, which makes sequential and threaded
schedules bit-identical.

Decision nodes delegate to the weighted L1 logistic surrogate and accept
the candidate only if it strictly improves weighted 0/1 loss plus the L1
penalty; leaves take the cost-weighted majority label. Acceptance uses a
tiny relative margin so that rounding-level "improvements" never make the
independently recomputed objective tick upward.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cart, metrics, solver, tree as treemod
from .dataset import Dataset
from .errors import DataError, NumericError
from .tree import DecisionNode, LeafNode, ObliqueTree


@dataclass
class TaoConfig:
    depth: int = 3
    lam: float = 0.0
    max_passes: int = 20
    pass_tol: float = 1e-6        # relative per-pass objective decrease
    init_policy: str = "best_of_both"   # random | cart | best_of_both
    seed: int = 0
    solver_cfg: solver.SolverConfig = field(
        default_factory=lambda: solver.SolverConfig(max_iter=200, tol=1e-8))
    # accept threshold relative to a node's reaching cost; rejects only
    # float-noise-scale "improvements", keeping recomputed objective
    # histories exactly nonincreasing and converged trees exact fixed points
    accept_margin: float = 1e-9
    min_leaf_weight: float = 0.0  # forwarded to the greedy init
    n_jobs: int = 1
    debug_checks: bool = False    # recompute+assert objective after every node

    def __post_init__(self):
        if self.depth < 1:
            raise DataError("depth must be >= 1")
        if self.lam < 0:
            raise DataError("lambda must be >= 0")
        if self.max_passes < 1:
            raise DataError("max_passes must be >= 1")
        if self.pass_tol < 0:
            raise DataError("pass_tol must be >= 0")
        if self.init_policy not in ("random", "cart", "best_of_both"):
            raise DataError(f"unknown init policy {self.init_policy!r}")


@dataclass
class CareSet:
    """Reduced problem at a decision node: points whose two child subtrees
    disagree in loss, pseudo-labeled with the cheaper side."""

    X: np.ndarray
    side: np.ndarray    # +1 send right, -1 send left
    omega: np.ndarray   # |loss_left - loss_right| (= c_n for 0/1 loss)

    @property
    def size(self) -> int:
        return self.X.shape[0]


@dataclass
class TaoResult:
    tree: ObliqueTree
    history: list          # objective after init and after each pass
    init_used: str         # random | cart | warm
    stop_reason: str       # fixed_point | pass_tol | max_passes
    n_passes: int

    def to_manifest(self, cfg: TaoConfig) -> dict:
        return {
            "config": {
                "depth": cfg.depth, "lambda": cfg.lam,
                "max_passes": cfg.max_passes, "pass_tol": cfg.pass_tol,
                "init_policy": cfg.init_policy, "seed": cfg.seed,
                "accept_margin": cfg.accept_margin, "n_jobs": cfg.n_jobs,
            },
            "objective_history": [float(v) for v in self.history],
            "init_used": self.init_used,
            "stop_reason": self.stop_reason,
            "n_passes": self.n_passes,
        }


def objective(t: ObliqueTree, ds: Dataset, lam: float) -> float:
    """Cost-weighted misclassification plus lam * sum of |w| over nodes."""
    pred = t.predict_model(ds.X)
    return float(np.sum(ds.c[pred != ds.y])) + lam * t.l1_penalty()


def build_care_set(t: ObliqueTree, nid: int, reach_idx: np.ndarray, ds: Dataset) -> CareSet:
    """Reduced binary problem for a decision node given its reaching rows."""
    node = t.nodes[nid]
    if not isinstance(node, DecisionNode):
        raise DataError(f"node {nid} is not a decision node")
    X = ds.X[reach_idx]
    y = ds.y[reach_idx]
    c = ds.c[reach_idx]
    if reach_idx.size == 0:
        return CareSet(X, np.empty(0), np.empty(0))
    loss_left = np.where(t.subtree_predict(node.left, X) != y, c, 0.0)
    loss_right = np.where(t.subtree_predict(node.right, X) != y, c, 0.0)
    keep = loss_left != loss_right
    side = np.where(loss_right[keep] < loss_left[keep], 1.0, -1.0)
    return CareSet(X[keep], side, np.abs(loss_left - loss_right)[keep])


def optimize_decision_node(t: ObliqueTree, nid: int, care: CareSet, lam: float,
                           cfg: TaoConfig):
    """Solver candidate for one node; returns (w, w0) if strictly better
    under weighted 0/1 loss + L1 penalty, else None (keep current)."""
    node = t.nodes[nid]
    if care.size == 0:
        return None
    problem = solver.WeightedBinaryProblem(care.X, care.side, care.omega, lam)
    current = solver.LinearModel(node.w, node.w0)
    candidate = solver.solve(problem, current, cfg.solver_cfg)
    cur_score = solver.weighted_01_loss(current, problem) + lam * float(np.sum(np.abs(node.w)))
    cand_score = solver.weighted_01_loss(candidate, problem) \
        + lam * float(np.sum(np.abs(candidate.w)))
    margin = cfg.accept_margin * max(1.0, float(np.sum(care.omega)))
    if cand_score < cur_score - margin:
        return candidate.w.copy(), candidate.w0
    return None


def optimize_leaf(t: ObliqueTree, nid: int, reach_idx: np.ndarray, ds: Dataset,
                  cfg: TaoConfig):
    """Cost-weighted majority label; returns new label or None to keep.
    Empty reach and exact ties keep the incumbent."""
    node = t.nodes[nid]
    if not isinstance(node, LeafNode):
        raise DataError(f"node {nid} is not a leaf")
    if reach_idx.size == 0:
        return None
    y, c = ds.y[reach_idx], ds.c[reach_idx]
    loss = [float(np.sum(c[y != 0])), float(np.sum(c[y != 1]))]
    other = 1 - node.label
    margin = cfg.accept_margin * max(1.0, float(np.sum(c)))
    if loss[other] < loss[node.label] - margin:
        return other
    return None


def _proposals_for_level(t, level_ids, reach, ds, cfg):
    def compute(nid):
        node = t.nodes[nid]
        if isinstance(node, LeafNode):
            return nid, optimize_leaf(t, nid, reach[nid], ds, cfg)
        care = build_care_set(t, nid, reach[nid], ds)
        return nid, optimize_decision_node(t, nid, care, cfg.lam, cfg)

    if cfg.n_jobs > 1 and len(level_ids) > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(compute, level_ids))
    else:
        results = [compute(nid) for nid in level_ids]
    return dict(results)


def optimize_tree(t: ObliqueTree, ds: Dataset, cfg: TaoConfig) -> TaoResult:
    """Run alternating passes on a copy of the given tree (warm start).

    Final tree is pruned; objective history (init value plus one entry per
    pass) is monotonically nonincreasing, enforced with zero tolerance.
    """
    work = t.copy()
    history = [objective(work, ds, cfg.lam)]
    stop_reason = "max_passes"
    n_passes = 0
    for _ in range(cfg.max_passes):
        n_passes += 1
        changed = False
        e_debug = history[-1]
        reach = work.reach_sets(ds.X)  # valid per level: ancestors update later
        depths = work.node_depths()
        for level in sorted(set(depths.values()), reverse=True):
            level_ids = sorted(nid for nid, d in depths.items() if d == level)
            proposals = _proposals_for_level(work, level_ids, reach, ds, cfg)
            for nid in level_ids:
                prop = proposals[nid]
                if prop is None:
                    continue
                node = work.nodes[nid]
                if isinstance(node, LeafNode):
                    node.label = prop
                else:
                    node.w, node.w0 = prop
                changed = True
                if cfg.debug_checks:
                    e_now = objective(work, ds, cfg.lam)
                    if e_now > e_debug:
                        raise NumericError(
                            f"objective increased after updating node {nid}: "
                            f"{e_debug} -> {e_now}")
                    e_debug = e_now
        e_pass = objective(work, ds, cfg.lam)
        if e_pass > history[-1]:
            raise NumericError(f"objective increased across a pass: "
                               f"{history[-1]} -> {e_pass}")
        prev = history[-1]
        history.append(e_pass)
        if not changed:
            stop_reason = "fixed_point"
            break
        drop = prev - e_pass
        rel = drop / prev if prev > 0 else drop
        if rel < cfg.pass_tol:
            stop_reason = "pass_tol"
            break
    pruned = treemod.prune(work)
    return TaoResult(pruned, history, "warm", stop_reason, n_passes)


def _initial_tree(ds: Dataset, cfg: TaoConfig, policy: str) -> ObliqueTree:
    if policy == "random":
        return cart.random_complete(ds.dim, cfg.depth, cfg.seed)
    return cart.grow(ds, cfg.depth, cfg.min_leaf_weight)


def train(ds: Dataset, cfg: TaoConfig, val: Dataset | None = None) -> TaoResult:
    """Initialize per cfg.init_policy and optimize.

    best_of_both trains from the random and the greedy init and keeps the
    tree with the lower validation error (higher CWA); without a validation
    set it falls back to the lower final training objective.
    """
    if ds.n < 2:
        raise DataError("need at least 2 training samples")
    if len(np.unique(ds.y)) < 2:
        raise DataError("single-class dataset: nothing to separate")
    if cfg.init_policy in ("random", "cart"):
        init = _initial_tree(ds, cfg, cfg.init_policy)
        result = optimize_tree(init, ds, cfg)
        return replace(result, init_used=cfg.init_policy)

    candidates = []
    for policy in ("random", "cart"):
        res = replace(optimize_tree(_initial_tree(ds, cfg, policy), ds, cfg),
                      init_used=policy)
        if val is not None:
            score = -metrics.cwa(res.tree, val)
        else:
            score = res.history[-1]
        candidates.append((score, policy, res))
    candidates.sort(key=lambda item: (item[0], item[1]))  # tie prefers 'cart'
    return candidates[0][2]


def rerun_fixed_point(t: ObliqueTree, ds: Dataset, cfg: TaoConfig) -> TaoResult:
    """Re-optimize a converged tree on the same data.

    For a tree train() finished at a fixed point, no node update is
    accepted: objective and structural signature come back unchanged.
    """
    return optimize_tree(t, ds, cfg)
