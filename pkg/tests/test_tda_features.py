import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from geotop.cubical_persistence import PersistenceDiagram, superlevel_diagram
from geotop.image_ingest import MultiChannelImage, preprocess
from geotop.tda_features import (
    FEATURE_NAMES, METRICS, TDA_SCHEMA, AmplitudeConfig, Metric, amplitude, diagram_features,
    persistence_entropy, tda_feature_vector,
)

bars_strategy = st.lists(
    st.tuples(st.floats(-5, 5), st.floats(0.01, 5)).map(lambda bl: (bl[0], bl[0] + bl[1])),
    min_size=1, max_size=8)


def diagram(pairs):
    """Sublevel-form (birth, death) pairs as an (n, 2) array."""
    return np.asarray(pairs, dtype=float).reshape(-1, 2)


def test_empty_diagram_all_zero():
    empty = PersistenceDiagram.empty()
    assert np.array_equal(diagram_features(empty), np.zeros(8))
    for m in METRICS:
        assert amplitude(diagram([]), metric=m) == 0.0


def test_single_bar_identities():
    d = diagram([(0, 2)])
    assert amplitude(d, metric="bottleneck") == pytest.approx(1.0, rel=1e-12)
    assert amplitude(d, metric="wasserstein", p=2) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert amplitude(diagram([(0, 2), (0, 2)]), metric="wasserstein") == pytest.approx(2.0, rel=1e-12)
    assert persistence_entropy(d) == 0.0


def test_entropy_values():
    assert persistence_entropy(diagram([(0, 2), (1, 3)])) == pytest.approx(math.log(2), abs=1e-12)
    assert persistence_entropy(diagram([(0, 1), (0, 3)])) == pytest.approx(
        -(0.25 * math.log(0.25) + 0.75 * math.log(0.75)), abs=1e-12)
    assert persistence_entropy(diagram([(1, 1)])) == 0.0


def test_superlevel_input_is_negated():
    sup = PersistenceDiagram.from_bars([(3.0, 1.0, 0), (2.0, 1.5, 0)])
    sub = diagram([(-3.0, -1.0), (-2.0, -1.5)])
    for m in METRICS:
        assert amplitude(sup, metric=m) == amplitude(sub, metric=m)


def test_config_validation():
    for bad in ({"p": 0.5}, {"n_bins": 1}, {"sigma": 0}, {"n_layers": 0}, {"metric": "nope"}):
        with pytest.raises(ValueError):
            AmplitudeConfig(**bad)


# ---- dense numerical oracles, written pointwise and independently of the implementation

def _tent(b, d, t):
    return max(0.0, min(t - b, d - t))


def oracle_landscape(pairs, p=2, k=1):
    lo, hi = pairs[:, 0].min(), pairs[:, 1].max()
    def lam(t):
        vals = sorted((_tent(b, d, t) for b, d in pairs), reverse=True)
        return vals[k - 1] ** p
    pts = sorted(set(pairs.ravel()) | set((pairs[:, 0] + pairs[:, 1]) / 2))
    return integrate.quad(lam, lo, hi, points=pts[1:-1], limit=500)[0] ** (1 / p)


def oracle_silhouette(pairs, p=2, power=1):
    lo, hi = pairs[:, 0].min(), pairs[:, 1].max()
    w = (pairs[:, 1] - pairs[:, 0]) ** power
    def phi(t):
        return abs(sum(wi * _tent(b, d, t) for wi, (b, d) in zip(w, pairs)) / w.sum()) ** p
    pts = sorted(set(pairs.ravel()) | set((pairs[:, 0] + pairs[:, 1]) / 2))
    return integrate.quad(phi, lo, hi, points=pts[1:-1], limit=500)[0] ** (1 / p)


def oracle_betti(pairs, p=2):
    lo, hi = pairs[:, 0].min(), pairs[:, 1].max()
    def beta(t):
        return float(sum(b <= t < d for b, d in pairs)) ** p
    return integrate.quad(beta, lo, hi, points=sorted(set(pairs.ravel()))[1:-1], limit=500)[0] ** (1 / p)


def _gauss2(X, Y, cx, cy, s):
    return np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * s * s)) / (2 * np.pi * s * s)


def oracle_heat(pairs, p=2, sigma=0.1, n=1201):
    lo, hi = pairs[:, 0].min(), pairs[:, 1].max()
    s = sigma * (hi - lo)
    x = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    F = sum(_gauss2(X, Y, b, d, s) - _gauss2(X, Y, d, b, s) for b, d in pairs)
    return integrate.simpson(integrate.simpson(np.abs(F) ** p, x=x), x=x) ** (1 / p)


def oracle_pimage(pairs, p=2, sigma=0.1, n=1201):
    b, life = pairs[:, 0], pairs[:, 1] - pairs[:, 0]
    ext = max(b.max() - b.min(), life.max())
    s = sigma * ext
    x = np.linspace(b.min(), b.min() + ext, n)
    y = np.linspace(0, ext, n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    F = sum(li * _gauss2(X, Y, bi, li, s) for bi, li in zip(b, life))
    return integrate.simpson(integrate.simpson(np.abs(F) ** p, x=y), x=x) ** (1 / p)


ORACLES = {
    Metric.BETTI: oracle_betti,
    Metric.LANDSCAPE: oracle_landscape,
    Metric.SILHOUETTE: oracle_silhouette,
    Metric.HEAT: oracle_heat,
    Metric.PERSISTENCE_IMAGE: oracle_pimage,
}


@pytest.mark.parametrize("metric", list(ORACLES))
@pytest.mark.parametrize("seed", range(5))
def test_dense_oracle(metric, seed):
    rng = np.random.default_rng(seed)
    b = rng.uniform(0, 1, 5)
    pairs = np.c_[b, b + rng.uniform(0.05, 1, 5)]
    got = amplitude(pairs, metric=metric, n_bins=2000)
    want = ORACLES[metric](pairs)
    assert got == pytest.approx(want, rel=0.02)


def test_landscape_layers_and_silhouette_power_oracle():
    pairs = diagram([(0, 1), (0.2, 0.9), (0.5, 1.6)])
    assert amplitude(pairs, metric="landscape", n_layers=2, p=1, n_bins=2000) == pytest.approx(
        oracle_landscape(pairs, p=1, k=1) + oracle_landscape(pairs, p=1, k=2), rel=0.02)
    assert amplitude(pairs, metric="silhouette", power=2, n_bins=2000) == pytest.approx(
        oracle_silhouette(pairs, power=2), rel=0.02)


@settings(max_examples=60, deadline=None)
@given(bars_strategy, st.randoms(use_true_random=False))
def test_permutation_invariance(pairs, rnd):
    d = diagram(pairs)
    perm = list(range(len(d)))
    rnd.shuffle(perm)
    for m in METRICS:
        assert amplitude(d[perm], metric=m) == pytest.approx(amplitude(d, metric=m), rel=1e-9, abs=1e-12)
    assert persistence_entropy(d[perm]) == pytest.approx(persistence_entropy(d), rel=1e-12, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(bars_strategy, st.floats(0.01, 100))
def test_positive_homogeneity(pairs, c):
    d = diagram(pairs)
    for m in ("bottleneck", "wasserstein"):
        assert amplitude(c * d, metric=m) == pytest.approx(c * amplitude(d, metric=m), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(bars_strategy, st.floats(-5, 5), st.floats(1e-3, 5), st.floats(1, 4))
def test_wasserstein_monotone(pairs, b, life, p):
    d = diagram(pairs)
    more = np.vstack([d, [b, b + life]])
    assert amplitude(more, metric="wasserstein", p=p) >= amplitude(d, metric="wasserstein", p=p)


def test_schema_and_vector(rng):
    assert len(TDA_SCHEMA) == 64 and len(set(TDA_SCHEMA)) == 64
    assert TDA_SCHEMA[0] == "tda_gray_h0_bottleneck"
    assert TDA_SCHEMA[15] == "tda_gray_h1_entropy"
    assert TDA_SCHEMA[-1] == "tda_blue_h1_entropy"
    assert FEATURE_NAMES[-1] == "entropy" and len(FEATURE_NAMES) == 8
    img = preprocess(MultiChannelImage.from_rgb(rng.integers(0, 256, size=(24, 24, 3)).astype(float)))
    v = tda_feature_vector(img)
    assert v.values.shape == (64,) and np.isfinite(v.values).all()
    assert v.values[:8].tolist() == diagram_features(superlevel_diagram(img.channel("gray").values).in_dim(0)).tolist()


def test_gray_replicated_blocks_equal(rng):
    img = preprocess(MultiChannelImage.from_gray(rng.normal(size=(20, 20))))
    v = tda_feature_vector(img).values.reshape(4, 16)
    for k in range(1, 4):
        assert np.array_equal(v[k], v[0])


def test_constant_image():
    v = tda_feature_vector(MultiChannelImage.from_gray(np.zeros((8, 8)))).values.reshape(4, 2, 8)
    assert np.all(v[:, 1, :] == 0)
    assert np.all(v[:, 0, 7] == 0)
