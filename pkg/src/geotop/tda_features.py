"""Vectorisation of persistence diagrams into the 64-slot topological vector.

Every amplitude is a norm of the diagram seen as a distance to the empty
diagram. Diagrams are first brought to sublevel form so that
``birth <= death`` for every bar.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .cubical_persistence import Direction, PersistenceDiagram, superlevel_diagram
from .image_ingest import CHANNELS, MultiChannelImage


class Metric(str, enum.Enum):
    BOTTLENECK = "bottleneck"
    WASSERSTEIN = "wasserstein"
    BETTI = "betti"
    LANDSCAPE = "landscape"
    SILHOUETTE = "silhouette"
    HEAT = "heat"
    PERSISTENCE_IMAGE = "persistence_image"


METRICS = tuple(Metric)
FEATURE_NAMES = tuple(m.value for m in METRICS) + ("entropy",)
HOMOLOGY_DIMS = (0, 1)


@dataclass(frozen=True)
class AmplitudeConfig:
    """Knobs for :func:`amplitude`.

    ``sigma`` is expressed as a fraction of the diagram's raster extent.
    """

    metric: Metric = Metric.BOTTLENECK
    p: float = 2.0
    n_bins: int = 100
    sigma: float = 0.1
    n_layers: int = 1
    power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")


def sublevel_pairs(diagram: PersistenceDiagram | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(births, deaths)`` with ``birth <= death``.

    Accepts a :class:`PersistenceDiagram` (superlevel bars are negated) or an
    ``(n, 2)`` array already in sublevel form.
    """
    if isinstance(diagram, PersistenceDiagram):
        b, d = diagram.births, diagram.deaths
        if diagram.direction == Direction.SUPERLEVEL:
            b, d = -b, -d
        return np.asarray(b, dtype=np.float64), np.asarray(d, dtype=np.float64)
    arr = np.asarray(diagram, dtype=np.float64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def _lp(samples: np.ndarray, p: float, cell: float) -> float:
    if cell <= 0:
        return 0.0
    return float((np.sum(np.abs(samples) ** p) * cell) ** (1.0 / p))


def _tents(b: np.ndarray, d: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Tent functions, shape ``(n_bars, n_grid)``."""
    return np.maximum(0.0, np.minimum(grid[None, :] - b[:, None], d[:, None] - grid[None, :]))


def _gauss_raster(x: np.ndarray, y: np.ndarray, cx: np.ndarray, cy: np.ndarray,
                  sigma: float, weights: np.ndarray) -> np.ndarray:
    """Sum of weighted normalised isotropic Gaussians on the grid ``x`` by ``y``."""
    gx = np.exp(-((x[None, :] - cx[:, None]) ** 2) / (2 * sigma ** 2))
    gy = np.exp(-((y[None, :] - cy[:, None]) ** 2) / (2 * sigma ** 2))
    return (gx * weights[:, None]).T @ gy / (2 * np.pi * sigma ** 2)


def amplitude(diagram, cfg: AmplitudeConfig | None = None, **kwargs) -> float:
    """Distance of a diagram from the empty diagram under ``cfg.metric``."""
    if cfg is None:
        cfg = AmplitudeConfig(**kwargs)
    elif kwargs:
        cfg = replace(cfg, **kwargs)
    b, d = sublevel_pairs(diagram)
    if b.size == 0:
        return 0.0
    life = d - b
    p = cfg.p
    metric = cfg.metric

    if metric == Metric.BOTTLENECK:
        return float(life.max() / 2.0)
    if metric == Metric.WASSERSTEIN:
        return float(np.sum((life / np.sqrt(2.0)) ** p) ** (1.0 / p))

    if metric in (Metric.BETTI, Metric.LANDSCAPE, Metric.SILHOUETTE):
        lo, hi = b.min(), d.max()
        if hi <= lo:
            return 0.0
        grid = np.linspace(lo, hi, cfg.n_bins)
        step = (hi - lo) / (cfg.n_bins - 1)
        if metric == Metric.BETTI:
            curve = np.sum((b[:, None] <= grid[None, :]) & (grid[None, :] < d[:, None]), axis=0)
            return _lp(curve.astype(np.float64), p, step)
        tents = _tents(b, d, grid)
        if metric == Metric.LANDSCAPE:
            layers = -np.sort(-tents, axis=0)[:cfg.n_layers]
            return _lp(layers, p, step)
        weights = life ** cfg.power
        total = weights.sum()
        if total <= 0:
            return 0.0
        return _lp(weights @ tents / total, p, step)

    if metric == Metric.HEAT:
        lo, hi = b.min(), d.max()
        extent = hi - lo
        if extent <= 0:
            return 0.0
        sigma = cfg.sigma * extent
        axis = np.linspace(lo, hi, cfg.n_bins)
        step = extent / (cfg.n_bins - 1)
        ones = np.ones_like(b)
        raster = _gauss_raster(axis, axis, b, d, sigma, ones) - _gauss_raster(axis, axis, d, b, sigma, ones)
        return _lp(raster, p, step * step)

    if metric == Metric.PERSISTENCE_IMAGE:
        extent = max(b.max() - b.min(), life.max())
        if extent <= 0:
            return 0.0
        sigma = cfg.sigma * extent
        bx = np.linspace(b.min(), b.min() + extent, cfg.n_bins)
        py = np.linspace(0.0, extent, cfg.n_bins)
        step = extent / (cfg.n_bins - 1)
        raster = _gauss_raster(bx, py, b, life, sigma, life)
        return _lp(raster, p, step * step)

    raise ValueError(f"unknown metric {metric}")  # pragma: no cover


def persistence_entropy(diagram) -> float:
    """Shannon entropy (natural log) of the normalised bar lifetimes."""
    b, d = sublevel_pairs(diagram)
    life = d - b
    life = life[life > 0]
    total = life.sum()
    if life.size == 0 or total <= 0:
        return 0.0
    prob = life / total
    return float(-np.sum(prob * np.log(prob)))


def diagram_features(diagram, base: AmplitudeConfig | None = None) -> np.ndarray:
    """The 8 features of one diagram: seven amplitudes then entropy."""
    base = base or AmplitudeConfig()
    out = [amplitude(diagram, replace(base, metric=m)) for m in METRICS]
    out.append(persistence_entropy(diagram))
    return np.array(out)


def tda_schema() -> tuple[str, ...]:
    return tuple(f"tda_{ch}_h{dim}_{name}" for ch in CHANNELS for dim in HOMOLOGY_DIMS for name in FEATURE_NAMES)


TDA_SCHEMA = tda_schema()


@dataclass(frozen=True)
class TdaFeatureVector:
    values: np.ndarray
    schema: tuple[str, ...] = TDA_SCHEMA

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(TDA_SCHEMA),) or not np.all(np.isfinite(values)):
            raise ValueError("topological vector must hold 64 finite values")


def tda_feature_vector(img: MultiChannelImage, cfg: AmplitudeConfig | None = None) -> TdaFeatureVector:
    """Per channel and homology dimension: 7 amplitudes and the entropy (64 slots)."""
    blocks = []
    cache: dict[bytes, PersistenceDiagram] = {}
    for channel in img.data:
        key = channel.tobytes()
        if key not in cache:
            cache[key] = superlevel_diagram(channel)
        diagram = cache[key]
        for dim in HOMOLOGY_DIMS:
            blocks.append(diagram_features(diagram.in_dim(dim), cfg))
    return TdaFeatureVector(np.concatenate(blocks))
