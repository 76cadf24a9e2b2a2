"""Lipschitz-Killing curvatures of excursion sets and their summaries.

Excursion sets are unions of closed unit squares (one per active pixel).
Area counts pixels, perimeter counts unit boundary edges (the outside of the
image is inactive) and the Euler characteristic is ``V - E + F`` of the
cubical set, which equals 8-connected components minus 4-connected holes.

:func:`lkc_curves` evaluates all thresholds at once: every vertex, edge and
boundary edge becomes active at a fixed value, so the raw counts at ``t`` are
``#{activation value >= t}``, read off sorted arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .image_ingest import CHANNELS, BinaryImage, MultiChannelImage, ScalarField, excursion_set
from .tda_features import TdaFeatureVector, tda_feature_vector, AmplitudeConfig

N_THRESHOLDS = 200
CURVES = ("euler", "perimeter", "area")
SUMMARIES = ("l2", "l2_diff", "integral", "integral_diff", "sum", "entropy", "entropy_diff",
             "nonzero", "nonzero_diff", "sum_diff")


def _mask(bin_img) -> np.ndarray:
    return bin_img.mask if isinstance(bin_img, BinaryImage) else np.asarray(bin_img, dtype=bool)


def area_raw(bin_img) -> int:
    return int(np.count_nonzero(_mask(bin_img)))


def perimeter_raw(bin_img) -> int:
    """Unit edges between an active pixel and an inactive pixel or the outside."""
    m = np.pad(_mask(bin_img), 1).astype(np.int8)
    return int(np.count_nonzero(np.diff(m, axis=0)) + np.count_nonzero(np.diff(m, axis=1)))


def euler_raw(bin_img) -> int:
    """``V - E + F`` of the union of closed active pixels."""
    m = np.pad(_mask(bin_img), 1)
    faces = np.count_nonzero(m)
    # a vertex/edge is present when any incident pixel is active
    verts = np.count_nonzero(m[:-1, :-1] | m[:-1, 1:] | m[1:, :-1] | m[1:, 1:])
    edges = np.count_nonzero(m[:-1, :] | m[1:, :]) + np.count_nonzero(m[:, :-1] | m[:, 1:])
    return int(verts - edges + faces)


def thresholds_for(values: np.ndarray, n: int = N_THRESHOLDS) -> np.ndarray:
    return np.linspace(values.min(), values.max(), n)


@dataclass(frozen=True)
class CellActivation:
    """Activation values of every cell type of a field under superlevel thresholding."""

    faces: np.ndarray
    edges: np.ndarray
    verts: np.ndarray
    boundary_on: np.ndarray   # larger value of each 4-adjacent pair (incl. outside = -inf)
    boundary_off: np.ndarray  # smaller value of each 4-adjacent pair

    @classmethod
    def of(cls, values: np.ndarray) -> "CellActivation":
        pad = np.pad(np.asarray(values, dtype=np.float64), 1, constant_values=-np.inf)
        verts = np.maximum(np.maximum(pad[:-1, :-1], pad[:-1, 1:]), np.maximum(pad[1:, :-1], pad[1:, 1:]))
        v_pairs = (pad[:-1, 1:-1], pad[1:, 1:-1])
        h_pairs = (pad[1:-1, :-1], pad[1:-1, 1:])
        edges = np.concatenate([np.maximum(*v_pairs).ravel(), np.maximum(*h_pairs).ravel()])
        lows = np.concatenate([np.minimum(*v_pairs).ravel(), np.minimum(*h_pairs).ravel()])
        return cls(
            faces=np.sort(values.ravel()),
            edges=np.sort(edges),
            verts=np.sort(verts.ravel()),
            boundary_on=np.sort(edges),
            boundary_off=np.sort(lows),
        )

    @staticmethod
    def _count_at_least(sorted_vals: np.ndarray, t: np.ndarray) -> np.ndarray:
        return sorted_vals.size - np.searchsorted(sorted_vals, t, side="left")

    def counts(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Raw ``(area, perimeter, euler)`` at each threshold."""
        f = self._count_at_least(self.faces, t)
        e = self._count_at_least(self.edges, t)
        v = self._count_at_least(self.verts, t)
        perim = self._count_at_least(self.boundary_on, t) - self._count_at_least(self.boundary_off, t)
        return f, perim, v - e + f


@dataclass(frozen=True)
class LkcCurves:
    thresholds: np.ndarray
    area: np.ndarray
    perimeter: np.ndarray
    euler: np.ndarray
    n_pixels: int

    def curve(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def raw(self, name: str) -> np.ndarray:
        """Unscaled counts (integers up to rounding)."""
        return np.rint(getattr(self, name) * self.n_pixels).astype(np.int64)


def lkc_curves(field, n_thresholds: int = N_THRESHOLDS, *, perimeter_scale: float = 1.0) -> LkcCurves:
    """Scaled area, perimeter and Euler curves on equispaced thresholds from min to max.

    Each raw count is divided by the pixel count. ``perimeter_scale`` is a
    multiplicative correction applied to the raw perimeter (1 = plain edge
    count). A constant field yields ``n_thresholds`` equal thresholds.
    """
    values = field.values if isinstance(field, ScalarField) else np.asarray(field, dtype=np.float64)
    t = thresholds_for(values, n_thresholds)
    area, perim, euler = CellActivation.of(values).counts(t)
    n_pixels = values.size
    return LkcCurves(t, area / n_pixels, perimeter_scale * perim / n_pixels, euler / n_pixels, n_pixels)


def lkc_curves_direct(field, n_thresholds: int = N_THRESHOLDS) -> LkcCurves:
    """Slow reference: threshold then count, one excursion set at a time."""
    values = field.values if isinstance(field, ScalarField) else np.asarray(field, dtype=np.float64)
    t = thresholds_for(values, n_thresholds)
    sets = [excursion_set(values, tk) for tk in t]
    n_pixels = values.size
    return LkcCurves(
        t,
        np.array([area_raw(s) for s in sets]) / n_pixels,
        np.array([perimeter_raw(s) for s in sets]) / n_pixels,
        np.array([euler_raw(s) for s in sets]) / n_pixels,
        n_pixels,
    )


def derivative(curve) -> np.ndarray:
    """Forward differences (length ``n - 1``)."""
    return np.diff(np.asarray(curve, dtype=np.float64))


def _entropy(v: np.ndarray) -> float:
    a = np.abs(v)
    total = a.sum()
    if total <= 0:
        return 0.0
    prob = a[a > 0] / total
    return float(-np.sum(prob * np.log(prob)))


def summarize(f, df, thresholds=None) -> np.ndarray:
    """Ten statistics of a curve and its derivative, in ``SUMMARIES`` order.

    Integrals use the trapezoid rule over ``thresholds`` (the derivative uses
    the first ``len(df)`` of them). Without thresholds a unit grid on
    ``[0, 1]`` is assumed.
    """
    f = np.asarray(f, dtype=np.float64)
    df = np.asarray(df, dtype=np.float64)
    t = np.linspace(0.0, 1.0, f.size) if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    return np.array([
        np.linalg.norm(f, ord=2),
        np.linalg.norm(df, ord=2),
        trapezoid(f, t),
        trapezoid(df, t[:df.size]),
        f.sum(),
        _entropy(f),
        _entropy(df),
        float(np.count_nonzero(f)),
        float(np.count_nonzero(df)),
        df.sum(),
    ])


def lkc_schema() -> tuple[str, ...]:
    return tuple(f"lkc_{ch}_{curve}_{s}" for ch in CHANNELS for curve in CURVES for s in SUMMARIES)


LKC_SCHEMA = lkc_schema()


@dataclass(frozen=True)
class LkcFeatureVector:
    values: np.ndarray
    schema: tuple[str, ...] = LKC_SCHEMA

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(LKC_SCHEMA),) or not np.all(np.isfinite(values)):
            raise ValueError("geometric vector must hold 120 finite values")


@dataclass(frozen=True)
class GeoTopFeatureVector:
    values: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self):
        if len(self.values) != 184 or len(self.schema) != 184:
            raise ValueError("GeoTop vector must hold 184 values")


def lkc_feature_vector(img: MultiChannelImage, n_thresholds: int = N_THRESHOLDS, *,
                       perimeter_scale: float = 1.0) -> LkcFeatureVector:
    """4 channels x 3 curves x 10 summaries (120 slots)."""
    blocks = []
    for channel in img.data:
        curves = lkc_curves(channel, n_thresholds, perimeter_scale=perimeter_scale)
        for name in CURVES:
            f = curves.curve(name)
            blocks.append(summarize(f, derivative(f), curves.thresholds))
    return LkcFeatureVector(np.concatenate(blocks))


def geotop_feature_vector(img: MultiChannelImage, cfg: AmplitudeConfig | None = None,
                          n_thresholds: int = N_THRESHOLDS) -> GeoTopFeatureVector:
    """Topological vector followed by the geometric vector (184 slots)."""
    tda: TdaFeatureVector = tda_feature_vector(img, cfg)
    lkc = lkc_feature_vector(img, n_thresholds)
    return GeoTopFeatureVector(np.concatenate([tda.values, lkc.values]), tda.schema + lkc.schema)


def curves_csv(img: MultiChannelImage, n_thresholds: int = N_THRESHOLDS) -> str:
    """Curve table ``channel, threshold, area, perimeter, euler`` for plotting."""
    lines = ["channel,threshold,area,perimeter,euler"]
    for name, channel in zip(CHANNELS, img.data):
        c = lkc_curves(channel, n_thresholds)
        for row in zip(c.thresholds, c.area, c.perimeter, c.euler):
            lines.append(name + "," + ",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
