"""Random forest of CART trees (Gini impurity, axis-aligned splits)."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .metrics import accuracy

FORMAT_NAME = "geotop-forest"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: str | int = "sqrt"
    min_samples_leaf: int = 1
    max_depth: int | None = None
    seed: int = 0
    n_jobs: int = 1

    def features_per_split(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(n_features)))
        if self.max_features in ("all", None):
            return n_features
        return max(1, min(int(self.max_features), n_features))


@dataclass
class Tree:
    """Flat array representation; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray          # majority class at every node
    bootstrap: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=np.float64),
                   np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=np.int64))


def _majority(counts: np.ndarray) -> int:
    # argmax returns the first maximum, so ties go to the lowest class
    return int(np.argmax(counts))


def _best_split(X: np.ndarray, onehot: np.ndarray, feats: np.ndarray, min_leaf: int):
    """Best Gini split over ``feats``; returns ``(score, feature, threshold)`` or None."""
    n = X.shape[0]
    V = X[:, feats]
    order = np.argsort(V, axis=0, kind="stable")
    Vs = np.take_along_axis(V, order, axis=0)
    left = np.cumsum(onehot[order], axis=0)[:-1]            # (n-1, k, K)
    total = onehot.sum(axis=0)
    right = total[None, None, :] - left
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    # minimising weighted Gini == maximising sum(left^2)/nl + sum(right^2)/nr
    score = (left ** 2).sum(axis=2) / nl + (right ** 2).sum(axis=2) / nr
    valid = (Vs[1:] > Vs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    pos, j = np.unravel_index(np.argmax(score), score.shape)
    lo, hi = Vs[pos, j], Vs[pos + 1, j]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(score[pos, j]), int(feats[j]), float(thr)


def build_tree(X: np.ndarray, y: np.ndarray, n_classes: int, params: ForestParams,
               rng: np.random.Generator) -> Tree:
    n, d = X.shape
    k = params.features_per_split(d)
    onehot = np.eye(n_classes, dtype=np.float64)[y]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(_majority(onehot[idx].sum(axis=0)))
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = onehot[idx].sum(axis=0)
        if np.count_nonzero(counts) <= 1 or idx.size < 2 * params.min_samples_leaf:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        perm = rng.permutation(d)
        split = None
        # draw further features only when the first draw has no valid split
        for start in range(0, d, k):
            split = _best_split(X[idx], onehot[idx], perm[start:start + k], params.min_samples_leaf)
            if split is not None:
                break
        if split is None:
            continue
        _, feat, thr = split
        go_left = X[idx, feat] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = feat, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value, dtype=np.int64))


def _fit_one(X, y, n_classes, params, seed_seq):
    rng = np.random.default_rng(seed_seq)
    boot = rng.integers(0, X.shape[0], size=X.shape[0])
    tree = build_tree(X[boot], y[boot], n_classes, params, rng)
    tree.bootstrap = boot
    return tree


class RandomForest:
    """Bagged CART trees with hard majority voting (ties go to class 0)."""

    def __init__(self, params: ForestParams | None = None, **kwargs):
        self.params = params or ForestParams(**kwargs)
        self.trees: list[Tree] = []
        self.n_features: int | None = None
        self.n_classes: int = 2

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("training matrix must be 2-D and non-empty")
        if y.shape != (X.shape[0],):
            raise ValueError("one label per row is required")
        if X.shape[0] < 2 or np.unique(y).size < 2:
            raise ValueError("training data must contain at least two classes")
        if not np.all(np.isfinite(X)):
            raise ValueError("training matrix contains non-finite values")
        y = y.astype(np.int64)
        self.n_classes = max(2, int(y.max()) + 1)
        self.n_features = X.shape[1]
        seeds = np.random.SeedSequence(self.params.seed).spawn(self.params.n_trees)
        if self.params.n_jobs == 1:
            self.trees = [_fit_one(X, y, self.n_classes, self.params, s) for s in seeds]
        else:
            self.trees = Parallel(n_jobs=self.params.n_jobs, prefer="threads")(
                delayed(_fit_one)(X, y, self.n_classes, self.params, s) for s in seeds)
        return self

    def _check(self, X) -> np.ndarray:
        if not self.trees:
            raise RuntimeError("forest is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return X

    def votes(self, X) -> np.ndarray:
        X = self._check(X)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            np.add.at(votes, (rows, tree.predict(X)), 1)
        return votes

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.votes(X), axis=1)

    def score(self, X, y) -> float:
        X = self._check(X)
        if X.shape[0] == 0:
            raise ValueError("cannot score an empty test set")
        return accuracy(np.asarray(y), self.predict(X))

    def oob_predict(self, X) -> np.ndarray:
        """Majority vote of the trees whose bootstrap sample missed each row.

        ``X`` must be the training matrix. Rows seen by every tree get -1.
        """
        X = self._check(X)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        for tree in self.trees:
            out = np.ones(X.shape[0], dtype=bool)
            out[tree.bootstrap] = False
            idx = np.flatnonzero(out)
            if idx.size:
                np.add.at(votes, (idx, tree.predict(X[idx])), 1)
        pred = np.argmax(votes, axis=1)
        pred[votes.sum(axis=1) == 0] = -1
        return pred

    def to_json(self) -> str:
        return json.dumps({
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "params": asdict(self.params),
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "trees": [t.to_dict() for t in self.trees],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RandomForest":
        data = json.loads(text)
        if data.get("format") != FORMAT_NAME or data.get("version") != FORMAT_VERSION:
            raise ValueError("not a version-1 forest dump")
        model = cls(ForestParams(**data["params"]))
        model.n_features = data["n_features"]
        model.n_classes = data["n_classes"]
        model.trees = [Tree.from_dict(t) for t in data["trees"]]
        return model


def train(X, y, params: ForestParams | None = None, **kwargs) -> RandomForest:
    return RandomForest(params, **kwargs).fit(X, y)


def predict(model: RandomForest, X) -> np.ndarray:
    return model.predict(X)


def score(model: RandomForest, X, y) -> float:
    return model.score(X, y)
