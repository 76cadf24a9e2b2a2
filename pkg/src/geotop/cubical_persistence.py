"""Cubical persistent homology of 2-D scalar fields.

Pixels are the top cells of a cubical complex; every edge and vertex takes
the minimum of its incident pixel values once the filtration direction has
been normalised to sublevel form. Active pixels are therefore 8-connected
and the complement is 4-connected.

Dimension 0 is computed by a descending union-find sweep with the elder
rule. Dimension 1 is computed on the dual: holes of the superlevel set are
the bounded 4-connected components of its complement, tracked by a second,
ascending union-find with a virtual node for the region outside the image.
"""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from . import _kernels
from .image_ingest import ScalarField


class Direction(str, enum.Enum):
    SUPERLEVEL = "superlevel"
    SUBLEVEL = "sublevel"


def _as_array(field) -> np.ndarray:
    if isinstance(field, ScalarField):
        return field.values
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D field, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field contains non-finite values")
    return arr


@dataclass(frozen=True)
class Filtration:
    field: ScalarField
    direction: Direction = Direction.SUPERLEVEL

    @property
    def normalized(self) -> np.ndarray:
        """Pixel values in sublevel form (negated for superlevel)."""
        v = self.field.values
        return -v if self.direction == Direction.SUPERLEVEL else v

    @property
    def cell_values(self) -> np.ndarray:
        """Values of all cells on the ``(2h+1, 2w+1)`` cubical grid, in field units.

        Pixel ``(i, j)`` sits at ``(2i+1, 2j+1)``; even coordinates are edges
        and vertices.
        """
        g = self.normalized
        h, w = g.shape
        pad = np.full((h + 2, w + 2), np.inf)
        pad[1:-1, 1:-1] = g
        cells = np.empty((2 * h + 1, 2 * w + 1))
        cells[1::2, 1::2] = g
        vert = np.minimum(np.minimum(pad[:-1, :-1], pad[:-1, 1:]), np.minimum(pad[1:, :-1], pad[1:, 1:]))
        cells[0::2, 0::2] = vert
        cells[0::2, 1::2] = np.minimum(pad[:-1, 1:-1], pad[1:, 1:-1])
        cells[1::2, 0::2] = np.minimum(pad[1:-1, :-1], pad[1:-1, 1:])
        return -cells if self.direction == Direction.SUPERLEVEL else cells


def build_filtration(field, direction: Direction | str = Direction.SUPERLEVEL) -> Filtration:
    if not isinstance(field, ScalarField):
        field = ScalarField(_as_array(field))
    return Filtration(field, Direction(direction))


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Finite persistence bars of dimensions 0 and 1.

    For superlevel diagrams ``birth >= death``. The single essential
    dimension-0 class is kept (flagged in ``essential``) with its death at the
    global extreme value opposite its birth.
    """

    births: np.ndarray
    deaths: np.ndarray
    dims: np.ndarray
    essential: np.ndarray
    direction: Direction = Direction.SUPERLEVEL

    def __post_init__(self):
        for name, dtype in (("births", np.float64), ("deaths", np.float64), ("dims", np.int64), ("essential", bool)):
            arr = np.array(getattr(self, name), dtype=dtype, copy=True).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "direction", Direction(self.direction))
        if not (len(self.births) == len(self.deaths) == len(self.dims) == len(self.essential)):
            raise ValueError("bar arrays must share one length")

    @classmethod
    def empty(cls, direction=Direction.SUPERLEVEL) -> "PersistenceDiagram":
        return cls(np.empty(0), np.empty(0), np.empty(0, dtype=np.int64), np.empty(0, dtype=bool), direction)

    @classmethod
    def from_bars(cls, bars: Iterable[tuple], direction=Direction.SUPERLEVEL) -> "PersistenceDiagram":
        """Build from ``(birth, death, dim)`` or ``(birth, death, dim, essential)`` tuples."""
        bars = [tuple(b) for b in bars]
        if not bars:
            return cls.empty(direction)
        births = [b[0] for b in bars]
        deaths = [b[1] for b in bars]
        dims = [b[2] for b in bars]
        ess = [bool(b[3]) if len(b) > 3 else False for b in bars]
        return cls(births, deaths, dims, ess, direction)

    def __len__(self) -> int:
        return len(self.births)

    @property
    def bars(self) -> list[tuple[float, float, int]]:
        return [(float(b), float(d), int(k)) for b, d, k in zip(self.births, self.deaths, self.dims)]

    @property
    def persistence(self) -> np.ndarray:
        return np.abs(self.births - self.deaths)

    def in_dim(self, dim: int) -> "PersistenceDiagram":
        keep = self.dims == dim
        return PersistenceDiagram(self.births[keep], self.deaths[keep], self.dims[keep],
                                  self.essential[keep], self.direction)

    def sorted_bars(self) -> list[tuple[float, float, int]]:
        """Bars as a canonical sorted list (for multiset comparison)."""
        return sorted(self.bars, key=lambda b: (b[2], -b[0], -b[1]))

    def to_json(self) -> str:
        return json.dumps([{"birth": b, "death": d, "dim": k} for b, d, k in self.bars])

    @classmethod
    def from_json(cls, text: str, direction=Direction.SUPERLEVEL) -> "PersistenceDiagram":
        items = json.loads(text)
        diagram = cls.from_bars([(it["birth"], it["death"], it["dim"]) for it in items], direction)
        return diagram._with_essential_guess()

    def _with_essential_guess(self) -> "PersistenceDiagram":
        # the essential bar is the dim-0 bar with the largest persistence (first on ties)
        ess = np.zeros(len(self), dtype=bool)
        idx = np.flatnonzero(self.dims == 0)
        if idx.size:
            ess[idx[np.argmax(self.persistence[idx])]] = True
        return PersistenceDiagram(self.births, self.deaths, self.dims, ess, self.direction)

    def to_csv(self) -> str:
        """Barcode table with columns ``bar_id, dim, birth, death``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bar_id", "dim", "birth", "death"])
        order = sorted(range(len(self)), key=lambda i: (self.dims[i], -self.persistence[i], i))
        for bar_id, i in enumerate(order):
            writer.writerow([bar_id, int(self.dims[i]), repr(float(self.births[i])), repr(float(self.deaths[i]))])
        return buf.getvalue()


def _descending_order(values: np.ndarray) -> np.ndarray:
    # value descending, then row-major index ascending
    return np.lexsort((np.arange(values.size), -values)).astype(np.int64)


def _superlevel_diagram(values: np.ndarray) -> PersistenceDiagram:
    h, w = values.shape
    flat = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
    order = _descending_order(flat)
    b_px, d_px, root = _kernels.sweep_components(flat, order, h, w)
    b0, d0 = flat[b_px], flat[d_px]
    keep = b0 != d0
    b0, d0 = b0[keep], d0[keep]

    asc = np.lexsort((np.arange(flat.size), flat)).astype(np.int64)
    min_px, merge_px = _kernels.sweep_holes(flat, asc, h, w)
    b1, d1 = flat[merge_px], flat[min_px]
    keep = b1 != d1
    b1, d1 = b1[keep], d1[keep]

    births = np.concatenate([[flat[root]], b0, b1])
    deaths = np.concatenate([[flat.min()], d0, d1])
    dims = np.concatenate([[0], np.zeros(len(b0), dtype=np.int64), np.ones(len(b1), dtype=np.int64)])
    essential = np.zeros(len(births), dtype=bool)
    essential[0] = True
    return PersistenceDiagram(births, deaths, dims, essential, Direction.SUPERLEVEL)


def compute_persistence(filt: Filtration) -> PersistenceDiagram:
    """Dimension-0 and dimension-1 bars of a filtration (zero-length bars dropped)."""
    if filt.direction == Direction.SUPERLEVEL:
        return _superlevel_diagram(filt.field.values)
    neg = _superlevel_diagram(-filt.field.values)
    return PersistenceDiagram(-neg.births, -neg.deaths, neg.dims, neg.essential, Direction.SUBLEVEL)


def superlevel_diagram(field) -> PersistenceDiagram:
    """Shortcut for ``compute_persistence(build_filtration(field))``."""
    return _superlevel_diagram(_as_array(field))


def betti_at(diagram: PersistenceDiagram, t: float) -> tuple[int, int]:
    """Betti numbers ``(beta0, beta1)`` of the filtration at threshold ``t``."""
    b, d, ess = diagram.births, diagram.deaths, diagram.essential
    if diagram.direction == Direction.SUPERLEVEL:
        alive = (b >= t) & ((t > d) | ess)
    else:
        alive = (b <= t) & ((t < d) | ess)
    return int(np.count_nonzero(alive & (diagram.dims == 0))), int(np.count_nonzero(alive & (diagram.dims == 1)))


def betti_profile(diagram: PersistenceDiagram, thresholds) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`betti_at` over many thresholds."""
    t = np.asarray(thresholds, dtype=np.float64)[:, None]
    b, d, ess, dims = diagram.births[None, :], diagram.deaths[None, :], diagram.essential[None, :], diagram.dims
    if diagram.direction == Direction.SUPERLEVEL:
        alive = (b >= t) & ((t > d) | ess)
    else:
        alive = (b <= t) & ((t < d) | ess)
    return alive[:, dims == 0].sum(axis=1), alive[:, dims == 1].sum(axis=1)


# --------------------------------------------------------------------------
# brute-force oracle

_EIGHT = np.ones((3, 3), dtype=int)
_FOUR = ndimage.generate_binary_structure(2, 1)


def brute_force_diagram(field) -> PersistenceDiagram:
    """Superlevel diagram by explicit threshold enumeration (test oracle).

    At every distinct value (descending) the 8-connected components of the
    excursion set and the bounded 4-connected components of its complement
    are labelled from scratch, then matched to the previous threshold by
    pixel containment. Limited to 32x32 fields with at most 64 values.
    """
    values = _as_array(field)
    h, w = values.shape
    levels = np.unique(values)[::-1]
    if h * w > 32 * 32 or h > 32 or w > 32 or len(levels) > 64:
        raise ValueError("brute-force oracle is limited to 32x32 fields with at most 64 distinct values")
    flat = values.reshape(-1)
    bars: list[tuple[float, float, int]] = []

    # components: list of (birth value, birth pixel); identified via their birth pixel
    comps: list[tuple[float, int]] = []
    # holes: dict min_pixel -> birth value
    holes: dict[int, float] = {}

    for u in levels:
        mask = values >= u
        labels, n_lab = ndimage.label(mask, structure=_EIGHT)
        lab_flat = labels.reshape(-1)
        groups: dict[int, list[tuple[float, int]]] = {lab: [] for lab in range(1, n_lab + 1)}
        for comp in comps:
            groups[int(lab_flat[comp[1]])].append(comp)
        new_comps = []
        for lab, members in groups.items():
            if not members:
                px = int(np.flatnonzero(lab_flat == lab).min())
                new_comps.append((float(u), px))
                continue
            members.sort(key=lambda c: (-c[0], c[1]))
            new_comps.append(members[0])
            bars.extend((c[0], float(u), 0) for c in members[1:] if c[0] != u)
        comps = new_comps

        # complement, padded so the outside region is one component
        back = np.ones((h + 2, w + 2), dtype=bool)
        back[1:-1, 1:-1] = ~mask
        blab, _ = ndimage.label(back, structure=_FOUR)
        outside = blab[0, 0]
        inner = blab[1:-1, 1:-1].reshape(-1)
        new_holes: dict[int, float] = {}
        claimed = set()
        for min_px, birth in holes.items():
            if flat[min_px] >= u:
                bars.append((birth, float(u), 1))
            else:
                new_holes[min_px] = birth
                claimed.add(int(inner[min_px]))
        for lab in np.unique(inner[~mask.reshape(-1)]):
            if lab == outside or int(lab) in claimed:
                continue
            members = np.flatnonzero(inner == lab)
            px = int(members[np.lexsort((members, flat[members]))[0]])
            new_holes[px] = float(u)
        holes = new_holes

    assert len(comps) == 1 and not holes
    bars.insert(0, (comps[0][0], float(values.min()), 0, True))
    return PersistenceDiagram.from_bars(bars, Direction.SUPERLEVEL)
