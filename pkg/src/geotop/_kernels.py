"""Numba union-find sweeps over pixel grids.

Pixels are addressed by their row-major flat index. Every sweep takes an
activation order (a permutation of pixel indices) and the pixel values, and
reports merge events by pixel index so callers can attach whatever values
they need.
"""
import numpy as np
from numba import njit

# 8-neighbourhood offsets; the first four are the 4-neighbourhood
_DR = np.array([-1, 1, 0, 0, -1, -1, 1, 1], dtype=np.int64)
_DC = np.array([0, 0, -1, 1, -1, 1, -1, 1], dtype=np.int64)


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _elder_first_superlevel(values, birth_px, a, b):
    """True when root ``a`` is elder than root ``b`` in a descending sweep."""
    va = values[birth_px[a]]
    vb = values[birth_px[b]]
    if va != vb:
        return va > vb
    return birth_px[a] < birth_px[b]


@njit(cache=True)
def sweep_components(values, order, height, width):
    """Descending 8-connected sweep with the elder rule.

    Returns ``(birth_px, death_px, root)``: for every merge, the birth pixel
    of the younger component and the pixel whose activation killed it;
    ``root`` is the birth pixel of the surviving (essential) component.
    Merges of zero persistence are included.
    """
    n = height * width
    parent = np.full(n, -1, dtype=np.int64)
    birth_px = np.arange(n, dtype=np.int64)
    out_birth = np.empty(n, dtype=np.int64)
    out_death = np.empty(n, dtype=np.int64)
    n_out = 0
    for k in range(n):
        p = order[k]
        parent[p] = p
        r = p // width
        c = p - r * width
        for j in range(8):
            rr = r + _DR[j]
            cc = c + _DC[j]
            if rr < 0 or rr >= height or cc < 0 or cc >= width:
                continue
            q = rr * width + cc
            if parent[q] < 0:
                continue
            rp = _find(parent, p)
            rq = _find(parent, q)
            if rp == rq:
                continue
            if _elder_first_superlevel(values, birth_px, rp, rq):
                elder, younger = rp, rq
            else:
                elder, younger = rq, rp
            out_birth[n_out] = birth_px[younger]
            out_death[n_out] = p
            n_out += 1
            parent[younger] = elder
    root = birth_px[_find(parent, order[n - 1])]
    return out_birth[:n_out], out_death[:n_out], root


@njit(cache=True)
def sweep_holes(values, order, height, width):
    """Ascending 4-connected sweep of the complement with a virtual border node.

    ``order`` activates pixels from lowest to highest value. The border node
    (index ``height * width``) is born first and never dies. Returns
    ``(min_px, merge_px)`` for every bounded complement component: the pixel
    holding its minimum and the pixel whose activation joined it to an elder
    component. Zero-persistence events are included.
    """
    n = height * width
    border = n
    parent = np.full(n + 1, -1, dtype=np.int64)
    parent[border] = border
    birth_px = np.arange(n + 1, dtype=np.int64)
    out_min = np.empty(n, dtype=np.int64)
    out_merge = np.empty(n, dtype=np.int64)
    n_out = 0
    for k in range(n):
        p = order[k]
        parent[p] = p
        r = p // width
        c = p - r * width
        on_border = r == 0 or r == height - 1 or c == 0 or c == width - 1
        for j in range(5):
            if j == 4:
                if not on_border:
                    continue
                q = border
            else:
                rr = r + _DR[j]
                cc = c + _DC[j]
                if rr < 0 or rr >= height or cc < 0 or cc >= width:
                    continue
                q = rr * width + cc
                if parent[q] < 0:
                    continue
            rp = _find(parent, p)
            rq = _find(parent, q)
            if rp == rq:
                continue
            if rq == border:
                elder, younger = rq, rp
            elif rp == border:
                elder, younger = rp, rq
            else:
                vp = values[birth_px[rp]]
                vq = values[birth_px[rq]]
                if vp < vq or (vp == vq and birth_px[rp] < birth_px[rq]):
                    elder, younger = rp, rq
                else:
                    elder, younger = rq, rp
            out_min[n_out] = birth_px[younger]
            out_merge[n_out] = p
            n_out += 1
            parent[younger] = elder
    return out_min[:n_out], out_merge[:n_out]


@njit(cache=True)
def sweep_geometry(values, order, height, width, thresholds):
    """Descending sweep recording per-component area and perimeter.

    ``thresholds`` must be sorted descending. After activating every pixel
    with value >= ``thresholds[k]``, the area and perimeter of every live
    root are appended to the sample arrays. Components are identified by
    their birth pixel. Returns
    ``(merge_birth, merge_death, merge_elder, root, s_k, s_birth, s_area, s_perim)``.
    """
    n = height * width
    parent = np.full(n, -1, dtype=np.int64)
    birth_px = np.arange(n, dtype=np.int64)
    area = np.zeros(n, dtype=np.int64)
    perim = np.zeros(n, dtype=np.int64)
    alive = np.zeros(n, dtype=np.bool_)
    out_birth = np.empty(n, dtype=np.int64)
    out_death = np.empty(n, dtype=np.int64)
    out_elder = np.empty(n, dtype=np.int64)
    n_out = 0
    cap = 1024
    s_k = np.empty(cap, dtype=np.int64)
    s_birth = np.empty(cap, dtype=np.int64)
    s_area = np.empty(cap, dtype=np.int64)
    s_perim = np.empty(cap, dtype=np.int64)
    n_s = 0
    roots = np.empty(n, dtype=np.int64)
    n_roots = 0
    k = 0
    n_thr = thresholds.shape[0]
    for ti in range(n_thr):
        t = thresholds[ti]
        while k < n and values[order[k]] >= t:
            p = order[k]
            k += 1
            parent[p] = p
            alive[p] = True
            roots[n_roots] = p
            n_roots += 1
            r = p // width
            c = p - r * width
            shared = 0
            for j in range(8):
                rr = r + _DR[j]
                cc = c + _DC[j]
                if rr < 0 or rr >= height or cc < 0 or cc >= width:
                    continue
                q = rr * width + cc
                if parent[q] < 0:
                    continue
                if j < 4:
                    shared += 1
                rp = _find(parent, p)
                rq = _find(parent, q)
                if rp == rq:
                    continue
                if _elder_first_superlevel(values, birth_px, rp, rq):
                    elder, younger = rp, rq
                else:
                    elder, younger = rq, rp
                out_birth[n_out] = birth_px[younger]
                out_death[n_out] = p
                out_elder[n_out] = birth_px[elder]
                n_out += 1
                parent[younger] = elder
                alive[younger] = False
                area[elder] += area[younger]
                perim[elder] += perim[younger]
            rp = _find(parent, p)
            area[rp] += 1
            perim[rp] += 4 - 2 * shared
        # compact root list and sample
        m = 0
        for i in range(n_roots):
            x = roots[i]
            if alive[x]:
                roots[m] = x
                m += 1
        n_roots = m
        if n_s + n_roots > cap:
            while n_s + n_roots > cap:
                cap *= 2
            s_k = _grow(s_k, cap)
            s_birth = _grow(s_birth, cap)
            s_area = _grow(s_area, cap)
            s_perim = _grow(s_perim, cap)
        for i in range(n_roots):
            x = roots[i]
            s_k[n_s] = ti
            s_birth[n_s] = birth_px[x]
            s_area[n_s] = area[x]
            s_perim[n_s] = perim[x]
            n_s += 1
    # activate the remainder so the merge record is complete
    while k < n:
        p = order[k]
        k += 1
        parent[p] = p
        r = p // width
        c = p - r * width
        for j in range(8):
            rr = r + _DR[j]
            cc = c + _DC[j]
            if rr < 0 or rr >= height or cc < 0 or cc >= width:
                continue
            q = rr * width + cc
            if parent[q] < 0:
                continue
            rp = _find(parent, p)
            rq = _find(parent, q)
            if rp == rq:
                continue
            if _elder_first_superlevel(values, birth_px, rp, rq):
                elder, younger = rp, rq
            else:
                elder, younger = rq, rp
            out_birth[n_out] = birth_px[younger]
            out_death[n_out] = p
            out_elder[n_out] = birth_px[elder]
            n_out += 1
            parent[younger] = elder
    root = birth_px[_find(parent, order[n - 1])]
    return (out_birth[:n_out], out_death[:n_out], out_elder[:n_out], root,
            s_k[:n_s], s_birth[:n_s], s_area[:n_s], s_perim[:n_s])


@njit(cache=True)
def _grow(arr, cap):
    out = np.empty(cap, dtype=arr.dtype)
    out[:arr.shape[0]] = arr
    return out
