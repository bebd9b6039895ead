"""Oblique decision tree model: topology, routing, pruning, persistence.

Nodes live in an arena keyed by integer id; ids survive save/load so trees
can be diffed across retrainings. Trees are immutable after training by
convention: only the trainer mutates node parameters, single-writer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Scaler
from .errors import DataError, ModelFormatError

MODEL_FORMAT_VERSION = 1


@dataclass
class DecisionNode:
    """Hyperplane test w.x + w0; negative routes left, else right."""

    w: np.ndarray
    w0: float
    left: int
    right: int

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.w0 = float(self.w0)


@dataclass
class LeafNode:
    label: int  # 0 = Zigbee, 1 = Lora

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DataError(f"leaf label must be 0 or 1, got {self.label}")


def decision_score(w, w0: float, x) -> float:
    """Canonical scalar hyperplane evaluation.

    Left-to-right sum over nonzero-weight terms, constant last: exactly the
    arithmetic of the emitted IF/ELSE program, so model and generated code
    agree even on boundary-straddling inputs.
    """
    s = 0.0
    for wj, xj in zip(w, x):
        if wj != 0.0:
            s += wj * xj
    return s + w0


def route(node: DecisionNode, x) -> int:
    """Child id the instance is sent to. Score 0 routes right."""
    x = np.asarray(x, dtype=float)
    if x.shape != node.w.shape:
        raise DataError(f"feature vector has length {x.shape}, node expects {node.w.shape}")
    return node.left if decision_score(node.w, node.w0, x) < 0 else node.right


class ObliqueTree:
    """Fixed-topology binary tree of hyperplane nodes and constant leaves."""

    def __init__(self, nodes: dict, root: int, scaler: Scaler | None = None,
                 lam: float | None = None):
        self.nodes = nodes
        self.root = root
        self.scaler = scaler
        self.lam = lam
        self.validate()

    # ---------- structure ----------

    def validate(self) -> None:
        """Proper binary tree: two children per decision node, unique parents,
        acyclic, every arena node reachable. O(#nodes)."""
        if self.root not in self.nodes:
            raise ModelFormatError(f"root id {self.root} not in arena")
        parents: dict[int, int] = {}
        dim = None
        stack = [self.root]
        seen = set()
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise ModelFormatError(f"node {nid} reached twice: cycle or shared child")
            seen.add(nid)
            node = self.nodes.get(nid)
            if node is None:
                raise ModelFormatError(f"dangling child id {nid}")
            if isinstance(node, DecisionNode):
                if not np.all(np.isfinite(node.w)) or not np.isfinite(node.w0):
                    raise ModelFormatError(f"node {nid}: non-finite parameters")
                if dim is None:
                    dim = node.w.shape[0]
                elif node.w.shape[0] != dim:
                    raise ModelFormatError(f"node {nid}: weight length {node.w.shape[0]} != {dim}")
                for child in (node.left, node.right):
                    if child in parents:
                        raise ModelFormatError(f"node {child} has two parents")
                    parents[child] = nid
                    stack.append(child)
        if seen != set(self.nodes):
            unreachable = sorted(set(self.nodes) - seen)
            raise ModelFormatError(f"unreachable nodes in arena: {unreachable}")
        self._dim = dim

    @property
    def dim(self) -> int | None:
        return self._dim

    def decision_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if isinstance(n, DecisionNode))

    def leaf_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if isinstance(n, LeafNode))

    def n_leaves(self) -> int:
        return len(self.leaf_ids())

    def node_depths(self) -> dict[int, int]:
        depths = {self.root: 0}
        stack = [self.root]
        while stack:
            nid = stack.pop()
            node = self.nodes[nid]
            if isinstance(node, DecisionNode):
                for child in (node.left, node.right):
                    depths[child] = depths[nid] + 1
                    stack.append(child)
        return depths

    @property
    def depth(self) -> int:
        return max(self.node_depths().values())

    def copy(self) -> "ObliqueTree":
        nodes = {}
        for i, n in self.nodes.items():
            if isinstance(n, DecisionNode):
                nodes[i] = DecisionNode(n.w.copy(), n.w0, n.left, n.right)
            else:
                nodes[i] = LeafNode(n.label)
        return ObliqueTree(nodes, self.root, scaler=self.scaler, lam=self.lam)

    def l1_penalty(self) -> float:
        """Sum of |w| over decision nodes, accumulated in id order."""
        return float(sum(np.sum(np.abs(self.nodes[i].w)) for i in self.decision_ids()))

    # ---------- prediction ----------

    def _leaf_for(self, x) -> int:
        nid = self.root
        node = self.nodes[nid]
        while isinstance(node, DecisionNode):
            nid = node.left if decision_score(node.w, node.w0, x) < 0 else node.right
            node = self.nodes[nid]
        return nid

    def predict(self, x) -> int:
        """Label for one raw feature vector (scaled internally if a scaler
        is attached). Canonical scalar arithmetic; see decision_score."""
        x = np.asarray(x, dtype=float)
        if self._dim is not None and x.shape != (self._dim,):
            raise DataError(f"feature vector has shape {x.shape}, tree expects ({self._dim},)")
        if self.scaler is not None:
            x = self.scaler.transform(x)
        return self.nodes[self._leaf_for(x)].label

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        """Vectorized predictions for raw feature rows."""
        X = np.asarray(X, dtype=float)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return self.predict_model(X)

    def predict_model(self, X: np.ndarray) -> np.ndarray:
        """Vectorized predictions for model-space rows (no scaler applied)."""
        X = np.asarray(X, dtype=float)
        if self._dim is not None and X.shape[1] != self._dim:
            raise DataError(f"feature matrix has {X.shape[1]} columns, tree expects {self._dim}")
        out = np.empty(X.shape[0], dtype=int)
        self._predict_into(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _predict_into(self, nid: int, X, idx, out) -> None:
        node = self.nodes[nid]
        if isinstance(node, LeafNode):
            out[idx] = node.label
            return
        if idx.size == 0:
            return
        go_left = (X[idx] @ node.w + node.w0) < 0
        self._predict_into(node.left, X, idx[go_left], out)
        self._predict_into(node.right, X, idx[~go_left], out)

    def reach_sets(self, X: np.ndarray) -> dict[int, np.ndarray]:
        """Per-node index arrays of the model-space rows that reach each node."""
        X = np.asarray(X, dtype=float)
        reach: dict[int, np.ndarray] = {}
        self._reach_into(self.root, X, np.arange(X.shape[0]), reach)
        return reach

    def _reach_into(self, nid, X, idx, reach) -> None:
        reach[nid] = idx
        node = self.nodes[nid]
        if isinstance(node, LeafNode):
            return
        if idx.size == 0:
            self._reach_into(node.left, X, idx, reach)
            self._reach_into(node.right, X, idx, reach)
            return
        go_left = (X[idx] @ node.w + node.w0) < 0
        self._reach_into(node.left, X, idx[go_left], reach)
        self._reach_into(node.right, X, idx[~go_left], reach)

    def subtree_predict(self, nid: int, X: np.ndarray) -> np.ndarray:
        """Predictions of the subtree rooted at nid for model-space rows."""
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0], dtype=int)
        self._predict_into(nid, X, np.arange(X.shape[0]), out)
        return out

    # ---------- transforms ----------

    def structural_signature(self) -> str:
        """Weight-independent skeleton: leaf letters, children parenthesized."""
        return self._sig(self.root)

    def _sig(self, nid: int) -> str:
        node = self.nodes[nid]
        if isinstance(node, LeafNode):
            return "Z" if node.label == 0 else "L"
        return "(" + self._sig(node.left) + self._sig(node.right) + ")"


def prune(tree: ObliqueTree) -> ObliqueTree:
    """Collapse all-zero hyperplanes into the child selected by sign(w0).

    Repeats to fixpoint; predictions are unchanged on every input. Node ids
    of surviving nodes are preserved.
    """
    nodes = {i: n for i, n in tree.copy().nodes.items()}
    root = tree.root
    changed = True
    while changed:
        changed = False
        for nid in sorted(nodes):
            node = nodes[nid]
            if isinstance(node, DecisionNode) and not np.any(node.w != 0.0):
                keep = node.left if node.w0 < 0 else node.right
                for other in nodes.values():
                    if isinstance(other, DecisionNode):
                        if other.left == nid:
                            other.left = keep
                        if other.right == nid:
                            other.right = keep
                if root == nid:
                    root = keep
                del nodes[nid]
                changed = True
                break
    reachable = set()
    stack = [root]
    while stack:
        nid = stack.pop()
        reachable.add(nid)
        node = nodes[nid]
        if isinstance(node, DecisionNode):
            stack.extend((node.left, node.right))
    nodes = {i: n for i, n in nodes.items() if i in reachable}
    return ObliqueTree(nodes, root, scaler=tree.scaler, lam=tree.lam)


def _tree_to_dict(tree: ObliqueTree) -> dict:
    nodes = []
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        if isinstance(node, DecisionNode):
            nodes.append({"id": nid, "kind": "decision", "w": [float(v) for v in node.w],
                          "w0": float(node.w0), "left": node.left, "right": node.right})
        else:
            nodes.append({"id": nid, "kind": "leaf", "label": int(node.label)})
    return {
        "version": MODEL_FORMAT_VERSION,
        "depth": tree.depth,
        "lambda": tree.lam,
        "scaler": tree.scaler.to_dict() if tree.scaler is not None else None,
        "root": tree.root,
        "nodes": nodes,
    }


def to_json(tree: ObliqueTree) -> str:
    """Canonical JSON text: save -> load -> save is byte-identical."""
    return json.dumps(_tree_to_dict(tree), indent=2, sort_keys=True) + "\n"


def save(tree: ObliqueTree, path) -> None:
    Path(path).write_text(to_json(tree), encoding="utf-8", newline="\n")


def from_json(text: str) -> ObliqueTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"model file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version!r}, "
                               f"expected {MODEL_FORMAT_VERSION}")
    for key in ("root", "nodes"):
        if key not in doc:
            raise ModelFormatError(f"model file missing field {key!r}")
    scaler = Scaler.from_dict(doc["scaler"]) if doc.get("scaler") is not None else None
    nodes: dict[int, DecisionNode | LeafNode] = {}
    if not isinstance(doc["nodes"], list) or not doc["nodes"]:
        raise ModelFormatError("model file 'nodes' must be a nonempty list")
    for entry in doc["nodes"]:
        try:
            nid = int(entry["id"])
            kind = entry["kind"]
            if nid in nodes:
                raise ModelFormatError(f"duplicate node id {nid}")
            if kind == "decision":
                nodes[nid] = DecisionNode(np.asarray(entry["w"], dtype=float),
                                          float(entry["w0"]),
                                          int(entry["left"]), int(entry["right"]))
            elif kind == "leaf":
                nodes[nid] = LeafNode(int(entry["label"]))
            else:
                raise ModelFormatError(f"node {nid}: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"malformed node entry {entry!r}: {e}") from e
    lam = doc.get("lambda")
    tree = ObliqueTree(nodes, int(doc["root"]), scaler=scaler,
                       lam=float(lam) if lam is not None else None)
    return tree


def load(path) -> ObliqueTree:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"no such model file: {path}")
    return from_json(path.read_text(encoding="utf-8"))
