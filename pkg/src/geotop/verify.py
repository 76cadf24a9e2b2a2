"""Seeded self-checks against independent oracles.

* persistence: union-find diagrams against the threshold-enumeration oracle
* Euler bridge: pixel-count Euler curves against ``beta0 - beta1`` from diagrams
* additivity: per-component tracks against global curves and against
  from-scratch labelling of every component
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .cubical_persistence import PersistenceDiagram, betti_profile, brute_force_diagram, superlevel_diagram
from .lkc_features import area_raw, lkc_curves, perimeter_raw
from .local_geometry import track_components

DiagramFn = Callable[[np.ndarray], PersistenceDiagram]


@dataclass
class VerifyResult:
    counts: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def check_oracle(rng, n_fields: int, diagram_fn: DiagramFn, result: VerifyResult) -> None:
    for i in range(n_fields):
        shape = (8, 8) if i % 4 else tuple(rng.integers(3, 13, size=2))
        levels = 8 if i % 3 else int(rng.integers(2, 20))
        f = rng.integers(0, levels, size=shape).astype(np.float64)
        got = diagram_fn(f).sorted_bars()
        want = brute_force_diagram(f).sorted_bars()
        result.counts["persistence_oracle"] = result.counts.get("persistence_oracle", 0) + 1
        if got != want:
            result.failures.append(f"persistence oracle mismatch on field #{i}")


def check_euler_bridge(rng, n_fields: int, diagram_fn: DiagramFn, result: VerifyResult, n_thresholds=200) -> None:
    for i in range(n_fields):
        f = rng.normal(size=(16, 16)) if i % 2 else rng.integers(0, 6, size=(16, 16)).astype(np.float64)
        curves = lkc_curves(f, n_thresholds)
        b0, b1 = betti_profile(diagram_fn(f), curves.thresholds)
        result.counts["euler_bridge"] = result.counts.get("euler_bridge", 0) + n_thresholds
        if not np.array_equal(curves.raw("euler"), b0 - b1):
            result.failures.append(f"Euler bridge mismatch on field #{i}")


def check_additivity(rng, n_fields: int, diagram_fn: DiagramFn, result: VerifyResult, n_thresholds=200) -> None:
    eight = np.ones((3, 3), dtype=int)
    for i in range(n_fields):
        f = rng.normal(size=(16, 16)) if i % 2 else rng.integers(0, 6, size=(16, 16)).astype(np.float64)
        tracks = track_components(f, n_thresholds)
        curves = lkc_curves(f, n_thresholds)
        grid = curves.thresholds
        area = np.zeros(n_thresholds, dtype=np.int64)
        perim = np.zeros(n_thresholds, dtype=np.int64)
        for tr in tracks:
            k = np.searchsorted(grid, tr.thresholds)
            np.add.at(area, k, tr.area_series)
            np.add.at(perim, k, tr.perimeter_series)
        result.counts["additivity"] = result.counts.get("additivity", 0) + 1
        if not (np.array_equal(area, curves.raw("area")) and np.array_equal(perim, curves.raw("perimeter"))):
            result.failures.append(f"additivity mismatch on field #{i}")

        h0 = diagram_fn(f).in_dim(0)
        got = sorted((tr.birth, tr.death) for tr in tracks)
        want = sorted(zip(h0.births.tolist(), h0.deaths.tolist()))
        result.counts["bar_correspondence"] = result.counts.get("bar_correspondence", 0) + 1
        if got != want:
            result.failures.append(f"track/bar mismatch on field #{i}")

        # every sampled component against a from-scratch labelling
        for tr in tracks:
            for t, a, p in zip(tr.thresholds, tr.area_series, tr.perimeter_series):
                labels, _ = ndimage.label(f >= t, structure=eight)
                comp = labels == labels.flat[tr.birth_pixel]
                result.counts["component_geometry"] = result.counts.get("component_geometry", 0) + 1
                if labels.flat[tr.birth_pixel] == 0 or area_raw(comp) != a or perimeter_raw(comp) != p:
                    result.failures.append(f"component geometry mismatch on field #{i}")
                    break


def run_verify(seed: int = 0, *, diagram_fn: DiagramFn = superlevel_diagram, n_oracle: int = 300,
               n_euler: int = 100, n_additivity: int = 100, log: Callable[[str], None] | None = None
               ) -> VerifyResult:
    """Run all suites; ``diagram_fn`` can be swapped to check that corruption is caught."""
    result = VerifyResult()
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    check_oracle(rng, n_oracle, diagram_fn, result)
    check_euler_bridge(rng, n_euler, diagram_fn, result)
    check_additivity(rng, n_additivity, diagram_fn, result)
    result.seconds = time.perf_counter() - start
    if log is not None:
        for name, count in result.counts.items():
            log(f"{name}: {count} comparisons")
        log(f"total: {result.total} comparisons, {len(result.failures)} failures, {result.seconds:.1f} s")
        for msg in result.failures[:20]:
            log(f"FAIL {msg}")
    return result
