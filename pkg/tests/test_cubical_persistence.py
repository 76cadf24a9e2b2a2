import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from geotop.cubical_persistence import (
    Direction, PersistenceDiagram, betti_at, betti_profile, brute_force_diagram, build_filtration,
    compute_persistence, superlevel_diagram,
)
from geotop.lkc_features import euler_raw

EIGHT = np.ones((3, 3), dtype=int)


def labelled_betti(mask):
    """(components, holes) by labelling: 8-connected foreground, bounded 4-connected background."""
    b0 = ndimage.label(mask, structure=EIGHT)[1]
    bg, nbg = ndimage.label(np.pad(~mask, 1, constant_values=True))
    return b0, nbg - 1


def test_fig2_fixture(fig2_field):
    d = superlevel_diagram(fig2_field)
    assert betti_at(d, 1.0) == (3, 2)
    assert labelled_betti(fig2_field >= 1) == (3, 2)


@pytest.mark.parametrize("seed", range(200))
def test_oracle_random_8x8(seed):
    f = np.random.default_rng(seed).integers(0, 8, size=(8, 8)).astype(float)
    assert superlevel_diagram(f).sorted_bars() == brute_force_diagram(f).sorted_bars()


@settings(max_examples=80, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.integers(0, 4)))
def test_oracle_hypothesis_shapes(values):
    f = values.astype(float)
    assert superlevel_diagram(f).sorted_bars() == brute_force_diagram(f).sorted_bars()


def test_ring_around_dark_center():
    f = np.zeros((5, 5))
    f[1:4, 1:4] = 1.0
    f[2, 2] = 0.0
    bars = superlevel_diagram(f).sorted_bars()
    assert (1.0, 0.0, 1) in bars
    assert [b for b in bars if b[2] == 1] == [(1.0, 0.0, 1)]
    assert bars == brute_force_diagram(f).sorted_bars()


def test_single_bright_pixel():
    f = np.zeros((4, 4))
    f[1, 2] = 3.0
    assert superlevel_diagram(f).sorted_bars() == [(3.0, 0.0, 0)]


def test_constant_field():
    d = superlevel_diagram(np.full((6, 4), 2.5))
    assert d.bars == [(2.5, 2.5, 0)]
    assert d.essential.tolist() == [True]
    assert betti_at(d, 2.5) == (1, 0)
    assert betti_at(d, 3.0) == (0, 0)


def test_diagonal_pixels_connect():
    f = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert betti_at(superlevel_diagram(f), 1.0) == (1, 0)
    cells = build_filtration(f).cell_values
    # shared vertex sits at the middle of the 5x5 cell grid
    assert cells[2, 2] == 1.0


def test_one_pixel_cells():
    cells = build_filtration(np.array([[5.0]])).cell_values
    assert cells.shape == (3, 3)
    assert np.all(cells == 5.0)


def test_elder_tie_goes_to_smaller_index():
    # two equal peaks merge at 0; the row-major first survives
    f = np.array([[2.0, 0.0, 2.0]])
    d = superlevel_diagram(f)
    assert d.sorted_bars() == [(2.0, 0.0, 0), (2.0, 0.0, 0)]
    assert d.essential.sum() == 1


def test_betti_edge_cases(rng):
    f = rng.normal(size=(12, 12))
    d = superlevel_diagram(f)
    assert betti_at(d, f.max() + 1) == (0, 0)
    assert betti_at(d, f.min()) == (1, 0)
    assert betti_at(d, f.min() - 5) == (1, 0)


@pytest.mark.parametrize("seed", range(30))
def test_betti_matches_labelling(seed):
    f = np.random.default_rng(seed).integers(0, 5, size=(14, 11)).astype(float)
    d = superlevel_diagram(f)
    ts = np.unique(f)
    b0, b1 = betti_profile(d, ts)
    for t, x, y in zip(ts, b0, b1):
        assert (x, y) == labelled_betti(f >= t) == betti_at(d, t)
        assert x - y == euler_raw(f >= t)


def test_superlevel_bars_ordered_and_finite(rng):
    d = superlevel_diagram(rng.normal(size=(20, 20)))
    assert np.all(d.births >= d.deaths)
    assert np.all(d.persistence > 0)
    assert np.isfinite(d.births).all() and np.isfinite(d.deaths).all()
    assert d.essential.sum() == 1
    assert d.deaths[d.essential][0] == d.deaths.min()


def test_monotone_births_follow_first_appearance(rng):
    # sweep order of component first appearance equals births sorted descending
    f = rng.permutation(64).reshape(8, 8).astype(float)
    births = np.sort(superlevel_diagram(f).in_dim(0).births)[::-1]
    seen, first = 0, []
    for t in np.sort(f.ravel())[::-1]:
        labels, n = ndimage.label(f >= t, structure=EIGHT)
        new = [labels.flat[k] for k in np.flatnonzero(f == t)]
        if np.count_nonzero(labels == new[0]) == 1:
            first.append(t)
        seen = n
    assert seen == 1
    assert np.array_equal(births, np.array(first))


def test_sublevel_duality(rng):
    f = rng.normal(size=(9, 13))
    sup = compute_persistence(build_filtration(f, Direction.SUPERLEVEL))
    sub = compute_persistence(build_filtration(-f, "sublevel"))
    assert sub.direction == Direction.SUBLEVEL
    assert np.array_equal(sub.births, -sup.births) and np.array_equal(sub.deaths, -sup.deaths)
    assert np.array_equal(build_filtration(-f, "sublevel").cell_values, -build_filtration(f).cell_values)
    for t in np.linspace(f.min(), f.max(), 7):
        assert betti_at(sub, -t) == betti_at(sup, t)


def _within_bottleneck(a: PersistenceDiagram, b: PersistenceDiagram, eps: float) -> bool:
    """True when some partial matching (rest to the diagonal) has every cost <= eps."""
    tol = eps + 1e-12
    for dim in (0, 1):
        pa = np.c_[a.in_dim(dim).births, a.in_dim(dim).deaths]
        pb = np.c_[b.in_dim(dim).births, b.in_dim(dim).deaths]
        n, m = len(pa), len(pb)
        big = 1e9
        cost = np.zeros((n + m, m + n))
        if n and m:
            cost[:n, :m] = np.abs(pa[:, None, :] - pb[None, :, :]).max(axis=2)
        cost[:n, m:] = big
        cost[n:, :m] = big
        for i in range(n):
            cost[i, m + i] = abs(pa[i, 0] - pa[i, 1]) / 2
        for j in range(m):
            cost[n + j, j] = abs(pb[j, 0] - pb[j, 1]) / 2
        viol = (cost > tol).astype(float)
        r, c = linear_sum_assignment(viol)
        if viol[r, c].sum() > 0:
            return False
    return True


@pytest.mark.parametrize("eps", [0.01, 0.1])
@pytest.mark.parametrize("seed", range(10))
def test_stability_under_noise(eps, seed):
    rng = np.random.default_rng(seed)
    f = rng.integers(0, 8, size=(10, 10)) / 7.0
    g = f + rng.uniform(-eps, eps, size=f.shape)
    assert _within_bottleneck(superlevel_diagram(f), superlevel_diagram(g), eps)


def test_stability_oracle_rejects_large_moves():
    a = PersistenceDiagram.from_bars([(1.0, 0.0, 0)])
    b = PersistenceDiagram.from_bars([(1.5, 0.0, 0)])
    assert not _within_bottleneck(a, b, 0.1)
    assert _within_bottleneck(a, b, 0.5)


def test_json_and_csv(rng):
    d = superlevel_diagram(rng.normal(size=(10, 10)))
    items = json.loads(d.to_json())
    assert set(items[0]) == {"birth", "death", "dim"}
    back = PersistenceDiagram.from_json(d.to_json())
    assert back.sorted_bars() == d.sorted_bars()
    assert back.essential.sum() == 1
    assert back.births[back.essential][0] == d.births[d.essential][0]
    lines = d.to_csv().strip().splitlines()
    assert lines[0] == "bar_id,dim,birth,death"
    assert len(lines) == len(d) + 1
    assert [int(x.split(",")[0]) for x in lines[1:]] == list(range(len(d)))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        superlevel_diagram(np.array([[np.inf]]))
    with pytest.raises(ValueError):
        superlevel_diagram(np.zeros(4))
    with pytest.raises(ValueError):
        brute_force_diagram(np.zeros((40, 40)))
    with pytest.raises(ValueError):
        PersistenceDiagram([1.0], [0.0, 1.0], [0], [True])
    assert len(PersistenceDiagram.empty()) == 0
