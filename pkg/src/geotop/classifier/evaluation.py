"""Repeated 80/20 evaluation of the three feature sets on shared splits."""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from .forest import ForestParams, RandomForest
from .metrics import accuracy, adjusted_rand_index, confusion_matrix, f1_precision

METHODS = ("tda", "lkc", "geotop")
METHOD_DIMS = {"tda": 64, "lkc": 120, "geotop": 184}
ARI_PAIRS = (("tda", "lkc"), ("lkc", "geotop"), ("tda", "geotop"))


@dataclass
class FeatureMatrix:
    rows: np.ndarray
    labels: np.ndarray
    method: str
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.rows.ndim != 2 or self.rows.shape[0] != self.labels.shape[0]:
            raise ValueError("rows and labels must have matching lengths")
        if self.method in METHOD_DIMS and self.rows.shape[1] != METHOD_DIMS[self.method]:
            raise ValueError(f"{self.method} rows must have {METHOD_DIMS[self.method]} columns")
        if not set(np.unique(self.labels)) <= {0, 1}:
            raise ValueError("labels must be binary")
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.labels))]


@dataclass
class RoundResult:
    train_idx: np.ndarray
    test_idx: np.ndarray
    predictions: dict[str, np.ndarray]
    scores: dict[str, float]
    confusion: dict[str, np.ndarray]
    f1: dict[str, float]
    precision: dict[str, float]
    ari: dict[str, float]

    @property
    def split_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.sort(self.train_idx).tobytes())
        h.update(b"|")
        h.update(np.sort(self.test_idx).tobytes())
        return h.hexdigest()


def _pair_key(a: str, b: str) -> str:
    return f"{a}|{b}"


def _pairs(methods: Sequence[str]) -> list[tuple[str, str]]:
    if set(methods) == set(METHODS):
        return list(ARI_PAIRS)
    return list(itertools.combinations(methods, 2))


@dataclass
class EvalReport:
    methods: tuple[str, ...]
    rounds: list[RoundResult]
    labels: np.ndarray
    ids: list[str]

    def scores(self, method: str) -> np.ndarray:
        return np.array([r.scores[method] for r in self.rounds])

    def mean_confusion(self, method: str) -> np.ndarray:
        return np.mean([r.confusion[method] for r in self.rounds], axis=0)

    def _stat(self, attr: str, key: str) -> tuple[float, float]:
        vals = np.array([getattr(r, attr)[key] for r in self.rounds])
        return float(vals.mean()), float(vals.std())

    def summary(self) -> dict:
        out = {"n_rounds": len(self.rounds), "methods": {}, "ari": {}}
        for m in self.methods:
            s = self.scores(m)
            f1_mean, f1_std = self._stat("f1", m)
            p_mean, p_std = self._stat("precision", m)
            out["methods"][m] = {
                "score_mean": float(s.mean()),
                "score_std": float(s.std()),
                "confusion_mean": self.mean_confusion(m).tolist(),
                "f1_mean": f1_mean,
                "f1_std": f1_std,
                "precision_mean": p_mean,
                "precision_std": p_std,
            }
        for a, b in _pairs(self.methods):
            key = _pair_key(a, b)
            mean, std = self._stat("ari", key)
            out["ari"][key] = {"mean": mean, "std": std}
        return out

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def scores_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["round", "method", "score", "f1", "precision", "tn", "fp", "fn", "tp"])
        for i, r in enumerate(self.rounds):
            for m in self.methods:
                cm = r.confusion[m]
                writer.writerow([i, m, repr(r.scores[m]), repr(r.f1[m]), repr(r.precision[m]),
                                 *(int(x) for x in cm.ravel())])
        return buf.getvalue()

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "true", "pred", "mean_count"])
        for m in self.methods:
            cm = self.mean_confusion(m)
            for t in range(cm.shape[0]):
                for p in range(cm.shape[1]):
                    writer.writerow([m, t, p, repr(float(cm[t, p]))])
        return buf.getvalue()

    def ari_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["pair", "mean", "std"])
        for key, stats in self.summary()["ari"].items():
            writer.writerow([key, repr(stats["mean"]), repr(stats["std"])])
        return buf.getvalue()


def _split(n: int, train_frac: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    n_train = int(round(train_frac * n))
    n_train = min(max(n_train, 1), n - 1)
    return perm[:n_train], perm[n_train:]


def _run_round(i: int, mats: Mapping[str, np.ndarray], y: np.ndarray, methods: Sequence[str],
               train_frac: float, seed: int, params: ForestParams) -> RoundResult:
    ss = np.random.SeedSequence([seed, i])
    split_seq, forest_seq = ss.spawn(2)
    rng = np.random.default_rng(split_seq)
    train_idx, test_idx = _split(len(y), train_frac, rng)
    # retry on single-class training sets so every round is trainable
    attempts = 0
    while np.unique(y[train_idx]).size < 2:
        attempts += 1
        if attempts > 100:
            raise ValueError("could not draw a training split containing both classes")
        train_idx, test_idx = _split(len(y), train_frac, rng)
    forest_seed = int(forest_seq.generate_state(1)[0])
    preds, scores, cms, f1s, precs = {}, {}, {}, {}, {}
    y_test = y[test_idx]
    for m in methods:
        X = mats[m]
        model = RandomForest(ForestParams(n_trees=params.n_trees, max_features=params.max_features,
                                          min_samples_leaf=params.min_samples_leaf,
                                          max_depth=params.max_depth, seed=forest_seed,
                                          n_jobs=params.n_jobs))
        model.fit(X[train_idx], y[train_idx])
        pred = model.predict(X[test_idx])
        preds[m] = pred
        scores[m] = accuracy(y_test, pred)
        cms[m] = confusion_matrix(y_test, pred)
        f1s[m], precs[m] = f1_precision(y_test, pred)
    ari = {_pair_key(a, b): adjusted_rand_index(preds[a], preds[b])
           for a, b in _pairs(methods)}
    return RoundResult(train_idx, test_idx, preds, scores, cms, f1s, precs, ari)


def bootstrap_evaluate(Xs: Mapping[str, FeatureMatrix | np.ndarray], y=None, n_rounds: int = 500,
                       train_frac: float = 0.8, seed: int = 0, params: ForestParams | None = None,
                       n_jobs: int = 1) -> EvalReport:
    """Train and score every method on the same random splits, ``n_rounds`` times.

    Round ``i`` draws its split and forest seed from ``(seed, i)`` only, so
    rounds are reproducible independently and identical matrices give
    identical predictions.
    """
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    if not 0 < train_frac < 1:
        raise ValueError("train_frac must lie in (0, 1)")
    params = params or ForestParams()
    methods = tuple(m for m in METHODS if m in Xs) + tuple(m for m in Xs if m not in METHODS)
    mats = {}
    ids: list[str] = []
    for m in methods:
        X = Xs[m]
        if isinstance(X, FeatureMatrix):
            if y is None:
                y = X.labels
            elif not np.array_equal(np.asarray(y), X.labels):
                raise ValueError(f"labels of {m} differ from the shared labels")
            if ids and X.ids != ids:
                raise ValueError(f"row ids of {m} differ from the other methods")
            ids = ids or list(X.ids)
            X = X.rows
        mats[m] = np.asarray(X, dtype=np.float64)
    if y is None:
        raise ValueError("labels are required")
    y = np.asarray(y, dtype=np.int64)
    for m, X in mats.items():
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{m} has {X.shape[0]} rows for {y.shape[0]} labels")
    ids = ids or [str(i) for i in range(len(y))]
    if n_jobs == 1:
        rounds = [_run_round(i, mats, y, methods, train_frac, seed, params) for i in range(n_rounds)]
    else:
        rounds = Parallel(n_jobs=n_jobs)(
            delayed(_run_round)(i, mats, y, methods, train_frac, seed, params) for i in range(n_rounds))
    return EvalReport(methods, rounds, y, ids)


GROUP_NAMES = {
    (True, True, True): "all_correct",
    (False, False, False): "all_wrong",
    (False, True, True): "only_tda_wrong",
    (True, False, True): "only_lkc_wrong",
    (True, True, False): "only_geotop_wrong",
    (True, False, False): "only_tda_correct",
    (False, True, False): "only_lkc_correct",
    (False, False, True): "only_geotop_correct",
}


def misclassification_report(report: EvalReport, image_ids: Sequence[str] | None = None,
                             round_index: int = -1) -> dict[str, list[str]]:
    """Partition one round's test images by which methods classified them correctly."""
    rnd = report.rounds[round_index]
    ids = list(image_ids) if image_ids is not None else report.ids
    y_test = report.labels[rnd.test_idx]
    correct = {m: rnd.predictions[m] == y_test for m in METHODS}
    groups: dict[str, list[str]] = {name: [] for name in GROUP_NAMES.values()}
    for k, row in enumerate(rnd.test_idx):
        key = tuple(bool(correct[m][k]) for m in METHODS)
        groups[GROUP_NAMES[key]].append(ids[row])
    return groups


def reproduction_checks(report: EvalReport, tol: float = 0.03) -> dict[str, bool]:
    """Soft comparison with the reference results on the skin-lesion dataset.

    Report-only: the targets are mean accuracy 0.84 for TDA and LKC, 0.87 for
    GeoTop, GeoTop at least as good as each single method, and a GeoTop
    confusion matrix with fewer false positives and false negatives than at
    least one single method.
    """
    s = report.summary()["methods"]
    if not set(METHODS) <= set(s):
        return {}
    mean = {m: s[m]["score_mean"] for m in METHODS}
    cm = {m: np.asarray(s[m]["confusion_mean"]) for m in METHODS}
    fp = {m: cm[m][0, 1] for m in METHODS}
    fn = {m: cm[m][1, 0] for m in METHODS}
    return {
        "tda_mean_near_0.84": abs(mean["tda"] - 0.84) <= tol,
        "lkc_mean_near_0.84": abs(mean["lkc"] - 0.84) <= tol,
        "geotop_mean_near_0.87": abs(mean["geotop"] - 0.87) <= tol,
        "geotop_beats_single_methods": mean["geotop"] >= max(mean["tda"], mean["lkc"]),
        "geotop_fewer_fp_and_fn": any(fp["geotop"] < fp[m] and fn["geotop"] < fn[m] for m in ("tda", "lkc")),
    }
