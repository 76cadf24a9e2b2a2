"""Batch feature extraction and the feature CSV format.

A feature CSV has one row per image: ``source_id``, ``label``, then one
column per schema slot. Floats are written with ``repr`` so files round-trip
bit for bit.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .classifier.evaluation import FeatureMatrix
from .image_ingest import MultiChannelImage, preprocess
from .lkc_features import LKC_SCHEMA, N_THRESHOLDS, lkc_feature_vector
from .tda_features import TDA_SCHEMA, AmplitudeConfig, tda_feature_vector

SCHEMAS = {"tda": TDA_SCHEMA, "lkc": LKC_SCHEMA, "geotop": TDA_SCHEMA + LKC_SCHEMA}


@dataclass
class ImageFeatures:
    source_id: str
    tda: np.ndarray
    lkc: np.ndarray

    @property
    def geotop(self) -> np.ndarray:
        return np.concatenate([self.tda, self.lkc])

    def get(self, method: str) -> np.ndarray:
        return getattr(self, method)


def extract_one(img: MultiChannelImage, *, n_thresholds: int = N_THRESHOLDS,
                amplitude_cfg: AmplitudeConfig | None = None, already_preprocessed: bool = False) -> ImageFeatures:
    if not already_preprocessed:
        img = preprocess(img)
    return ImageFeatures(
        img.source_id,
        tda_feature_vector(img, amplitude_cfg).values,
        lkc_feature_vector(img, n_thresholds).values,
    )


def extract_many(images: Sequence[MultiChannelImage], *, n_thresholds: int = N_THRESHOLDS,
                 amplitude_cfg: AmplitudeConfig | None = None, n_jobs: int = 1) -> list[ImageFeatures]:
    if n_jobs == 1:
        return [extract_one(img, n_thresholds=n_thresholds, amplitude_cfg=amplitude_cfg) for img in images]
    return Parallel(n_jobs=n_jobs)(
        delayed(extract_one)(img, n_thresholds=n_thresholds, amplitude_cfg=amplitude_cfg) for img in images)


def feature_matrices(features: Sequence[ImageFeatures], labels, methods=("tda", "lkc", "geotop")
                     ) -> dict[str, FeatureMatrix]:
    ids = [f.source_id for f in features]
    return {m: FeatureMatrix(np.array([f.get(m) for f in features]), np.asarray(labels), m, ids)
            for m in methods}


def write_feature_csv(path: str | os.PathLike, matrix: FeatureMatrix) -> None:
    schema = SCHEMAS[matrix.method]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source_id", "label", *schema])
        for sid, label, row in zip(matrix.ids, matrix.labels, matrix.rows):
            writer.writerow([sid, int(label), *(repr(float(v)) for v in row)])


def read_feature_csv(path: str | os.PathLike, method: str | None = None) -> FeatureMatrix:
    path = Path(path)
    if method is None:
        method = path.stem.removeprefix("features_")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["source_id", "label"]:
            raise ValueError(f"{path}: first columns must be source_id,label")
        if method in SCHEMAS and tuple(header[2:]) != SCHEMAS[method]:
            raise ValueError(f"{path}: columns do not match the {method} schema")
        ids, labels, rows = [], [], []
        for rec in reader:
            ids.append(rec[0])
            labels.append(int(rec[1]))
            rows.append([float(v) for v in rec[2:]])
    if not rows:
        raise ValueError(f"{path}: no feature rows")
    return FeatureMatrix(np.array(rows), np.array(labels), method, ids)
