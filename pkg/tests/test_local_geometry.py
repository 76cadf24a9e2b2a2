import numpy as np
import pytest
from scipy import ndimage

from geotop.cubical_persistence import superlevel_diagram
from geotop.image_ingest import gaussian_square_field
from geotop.lkc_features import area_raw, lkc_curves, perimeter_raw
from geotop.local_geometry import bars_csv, component_report, track_components, tracks_csv

EIGHT = np.ones((3, 3), dtype=int)


def summed(tracks, grid, attr):
    out = np.zeros(grid.size, dtype=np.int64)
    for tr in tracks:
        np.add.at(out, np.searchsorted(grid, tr.thresholds), getattr(tr, attr))
    return out


@pytest.mark.parametrize("seed", range(25))
def test_additivity_and_bars(seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(16, 16)) if seed % 2 else rng.integers(0, 6, size=(16, 16)).astype(float)
    tracks = track_components(f)
    curves = lkc_curves(f)
    assert np.array_equal(summed(tracks, curves.thresholds, "area_series"), curves.raw("area"))
    assert np.array_equal(summed(tracks, curves.thresholds, "perimeter_series"), curves.raw("perimeter"))
    h0 = superlevel_diagram(f).in_dim(0)
    assert sorted((t.birth, t.death) for t in tracks) == sorted(zip(h0.births, h0.deaths))


@pytest.mark.parametrize("seed", range(5))
def test_series_match_relabelling(seed):
    f = np.random.default_rng(seed).normal(size=(12, 12))
    for tr in track_components(f, 50):
        assert np.all(np.diff(tr.area_series) >= 0)
        for t, a, p in zip(tr.thresholds, tr.area_series, tr.perimeter_series):
            labels, _ = ndimage.label(f >= t, structure=EIGHT)
            comp = labels == labels.flat[tr.birth_pixel]
            assert area_raw(comp) == a and perimeter_raw(comp) == p


def test_single_blob_equals_global():
    r, c = np.mgrid[0:30, 0:30]
    f = -((r - 14.3) ** 2 + (c - 15.1) ** 2)
    tracks = track_components(f)
    assert len(tracks) == 1 and len(component_report(tracks)) == 1
    curves = lkc_curves(f)
    assert np.array_equal(tracks[0].area_series, curves.raw("area")[::-1])
    assert np.array_equal(tracks[0].perimeter_series, curves.raw("perimeter")[::-1])


def test_gaussian_square_toy():
    f = gaussian_square_field(200, 10)
    tracks = track_components(f)
    assert len(tracks) == 2
    square = min(tracks, key=lambda t: t.area_series.max())
    gauss = max(tracks, key=lambda t: t.area_series.max())
    assert square is not gauss
    assert set(square.area_series.tolist()) == {100}
    assert set(square.perimeter_series.tolist()) == {40}
    p1, p2 = square.persistence, gauss.persistence
    assert abs(p1 - p2) <= 0.1 * max(p1, p2)
    assert gauss.area_series.max() > square.area_series.max()
    report = component_report(tracks)
    assert report[0]["persistence"] >= report[1]["persistence"]
    assert square.absorbed_into == gauss.track_id or gauss.absorbed_into == square.track_id


def test_absorbed_track_stops_at_death(rng):
    f = rng.normal(size=(14, 14))
    tracks = track_components(f)
    ids = {t.track_id for t in tracks}
    assert sum(t.essential for t in tracks) == 1
    for tr in tracks:
        if tr.essential:
            assert tr.absorbed_into is None
            continue
        assert tr.absorbed_into in ids
        assert np.all(tr.thresholds > tr.death)
        assert np.all(tr.thresholds <= tr.birth)


def test_csv_exports(rng):
    tracks = track_components(rng.normal(size=(8, 8)), 20)
    lines = tracks_csv(tracks).strip().splitlines()
    assert lines[0] == "track_id,threshold,area,perimeter"
    assert len(lines) == 1 + sum(t.thresholds.size for t in tracks)
    bars = bars_csv(tracks).strip().splitlines()
    assert bars[0].startswith("track_id,birth,death") and len(bars) == len(tracks) + 1
