"""Numba kernels for HNSW graph construction and search.

Graph storage is flat and allocation-free during search: node ``i`` owns one
adjacency block starting at ``adj_off[i]`` laid out as
``[layer0: 2m slots][layer1: m slots]...[layerL: m slots]`` and one degree
block of ``levels[i] + 1`` counters starting at ``deg_off[i]``.

Distances are negated inner products, so min-heap logic applies throughout.
All orderings tie-break on the node index, which the wrapper keeps equal to
ascending external-id order; single-threaded calls are therefore fully
deterministic.

``vecs`` may be float32 rows or int8 codes: callers pass an effective query
``qeff`` (the raw query, or query * scales) plus a constant ``qconst``
(0, or query . offsets) so that score(i) = qconst + qeff . vecs[i] in both
representations.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = {"cache": True, "nogil": True}


@njit(**_JIT)
def _less(d1, i1, d2, i2):
    return d1 < d2 or (d1 == d2 and i1 < i2)


@njit(**_JIT)
def _greater(d1, i1, d2, i2):
    return d1 > d2 or (d1 == d2 and i1 > i2)


@njit(**_JIT)
def _dist_to_query(vecs, i, qeff, qconst):
    s = qconst
    for d in range(qeff.shape[0]):
        s += qeff[d] * vecs[i, d]
    return -s


@njit(**_JIT)
def _pair_dist(vecs, a, b):
    s = np.float32(0.0)
    for d in range(vecs.shape[1]):
        s += vecs[a, d] * vecs[b, d]
    return -s


@njit(**_JIT)
def _layer_base(adj_off_i, m, layer):
    if layer == 0:
        return adj_off_i
    return adj_off_i + 2 * m + (layer - 1) * m


# --- growable min-heap over (dist, id) ---------------------------------

@njit(**_JIT)
def _cand_push(hd, hi, size, d, i):
    if size >= hd.shape[0]:
        nhd = np.empty(hd.shape[0] * 2, np.float32)
        nhi = np.empty(hi.shape[0] * 2, np.int32)
        nhd[:size] = hd[:size]
        nhi[:size] = hi[:size]
        hd, hi = nhd, nhi
    pos = size
    hd[pos] = d
    hi[pos] = i
    size += 1
    while pos > 0:
        parent = (pos - 1) // 2
        if _less(hd[pos], hi[pos], hd[parent], hi[parent]):
            hd[pos], hd[parent] = hd[parent], hd[pos]
            hi[pos], hi[parent] = hi[parent], hi[pos]
            pos = parent
        else:
            break
    return hd, hi, size


@njit(**_JIT)
def _cand_pop(hd, hi, size):
    d = hd[0]
    i = hi[0]
    size -= 1
    hd[0] = hd[size]
    hi[0] = hi[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        right = left + 1
        best = pos
        if left < size and _less(hd[left], hi[left], hd[best], hi[best]):
            best = left
        if right < size and _less(hd[right], hi[right], hd[best], hi[best]):
            best = right
        if best == pos:
            break
        hd[pos], hd[best] = hd[best], hd[pos]
        hi[pos], hi[best] = hi[best], hi[pos]
        pos = best
    return d, i, size


# --- bounded max-heap (worst-on-top result set) ------------------------

@njit(**_JIT)
def _res_sift_down(rd, ri, size, pos):
    while True:
        left = 2 * pos + 1
        right = left + 1
        best = pos
        if left < size and _greater(rd[left], ri[left], rd[best], ri[best]):
            best = left
        if right < size and _greater(rd[right], ri[right], rd[best], ri[best]):
            best = right
        if best == pos:
            break
        rd[pos], rd[best] = rd[best], rd[pos]
        ri[pos], ri[best] = ri[best], ri[pos]
        pos = best


@njit(**_JIT)
def _res_push(rd, ri, size, cap, d, i):
    if size < cap:
        pos = size
        rd[pos] = d
        ri[pos] = i
        size += 1
        while pos > 0:
            parent = (pos - 1) // 2
            if _greater(rd[pos], ri[pos], rd[parent], ri[parent]):
                rd[pos], rd[parent] = rd[parent], rd[pos]
                ri[pos], ri[parent] = ri[parent], ri[pos]
                pos = parent
            else:
                break
        return size
    if _less(d, i, rd[0], ri[0]):
        rd[0] = d
        ri[0] = i
        _res_sift_down(rd, ri, size, 0)
    return size


@njit(**_JIT)
def _sort_by_dist_id(cd, ci, n):
    for a in range(1, n):
        d = cd[a]
        i = ci[a]
        b = a - 1
        while b >= 0 and _greater(cd[b], ci[b], d, i):
            cd[b + 1] = cd[b]
            ci[b + 1] = ci[b]
            b -= 1
        cd[b + 1] = d
        ci[b + 1] = i


# --- core traversal -----------------------------------------------------

@njit(**_JIT)
def _greedy_descent(vecs, qeff, qconst, adj, adj_off, deg, deg_off, m, layer, start):
    cur = start
    cur_d = _dist_to_query(vecs, cur, qeff, qconst)
    improved = True
    while improved:
        improved = False
        base = _layer_base(adj_off[cur], m, layer)
        dg = deg[deg_off[cur] + layer]
        for j in range(dg):
            nb = adj[base + j]
            dn = _dist_to_query(vecs, nb, qeff, qconst)
            if _less(dn, nb, cur_d, cur):
                cur_d = dn
                cur = nb
                improved = True
    return cur


@njit(**_JIT)
def _search_layer(vecs, qeff, qconst, adj, adj_off, deg, deg_off, m, layer,
                  eps, visited, epoch, ef):
    hd = np.empty(4 * ef + 64, np.float32)
    hi = np.empty(4 * ef + 64, np.int32)
    hs = 0
    rd = np.empty(ef, np.float32)
    ri = np.empty(ef, np.int32)
    rs = 0
    for t in range(eps.shape[0]):
        e = eps[t]
        if visited[e] == epoch:
            continue
        visited[e] = epoch
        d = _dist_to_query(vecs, e, qeff, qconst)
        hd, hi, hs = _cand_push(hd, hi, hs, d, e)
        rs = _res_push(rd, ri, rs, ef, d, e)
    while hs > 0:
        d, c, hs = _cand_pop(hd, hi, hs)
        if rs >= ef and _greater(d, c, rd[0], ri[0]):
            break
        base = _layer_base(adj_off[c], m, layer)
        dg = deg[deg_off[c] + layer]
        for j in range(dg):
            nb = adj[base + j]
            if visited[nb] == epoch:
                continue
            visited[nb] = epoch
            dn = _dist_to_query(vecs, nb, qeff, qconst)
            if rs < ef or _less(dn, nb, rd[0], ri[0]):
                hd, hi, hs = _cand_push(hd, hi, hs, dn, nb)
                rs = _res_push(rd, ri, rs, ef, dn, nb)
    out_d = np.empty(rs, np.float32)
    out_i = np.empty(rs, np.int32)
    k = rs
    while k > 0:
        k -= 1
        out_d[k] = rd[0]
        out_i[k] = ri[0]
        rd[0] = rd[k]
        ri[0] = ri[k]
        _res_sift_down(rd, ri, k, 0)
    return out_d, out_i


@njit(**_JIT)
def _select_heuristic(vecs, cand_d, cand_i, n_cand, target, out):
    """Diversity-keeping neighbor selection over (dist, id)-ascending candidates.

    A candidate joins while capacity remains unless it lies closer to an
    already-selected neighbor than to the query; pruned candidates refill
    remaining slots in distance order.
    """
    nsel = 0
    ndisc = 0
    disc = np.empty(n_cand, np.int32)
    for t in range(n_cand):
        if nsel >= target:
            break
        d = cand_d[t]
        e = cand_i[t]
        good = True
        for s in range(nsel):
            if _pair_dist(vecs, e, out[s]) < d:
                good = False
                break
        if good:
            out[nsel] = e
            nsel += 1
        else:
            disc[ndisc] = e
            ndisc += 1
    t = 0
    while nsel < target and t < ndisc:
        out[nsel] = disc[t]
        nsel += 1
        t += 1
    return nsel


@njit(**_JIT)
def _build_graph(vectors, levels, m, ef_construction, adj, adj_off, deg, deg_off):
    """Insert nodes 0..n-1 sequentially; returns (entry, max_level)."""
    n = vectors.shape[0]
    visited = np.zeros(n, np.int64)
    epoch = 0
    entry = 0
    max_level = levels[0]
    qconst = np.float32(0.0)
    sel = np.empty(2 * m, np.int32)
    for i in range(1, n):
        q = vectors[i]
        l_i = levels[i]
        cur = entry
        lc = max_level
        while lc > l_i:
            cur = _greedy_descent(vectors, q, qconst, adj, adj_off, deg, deg_off, m, lc, cur)
            lc -= 1
        eps = np.empty(1, np.int32)
        eps[0] = cur
        layer = l_i if l_i < max_level else max_level
        while layer >= 0:
            epoch += 1
            out_d, out_i = _search_layer(
                vectors, q, qconst, adj, adj_off, deg, deg_off, m, layer,
                eps, visited, epoch, ef_construction,
            )
            nsel = _select_heuristic(vectors, out_d, out_i, out_i.shape[0], m, sel)
            cap = 2 * m if layer == 0 else m
            base_i = _layer_base(adj_off[i], m, layer)
            for s in range(nsel):
                adj[base_i + s] = sel[s]
            deg[deg_off[i] + layer] = nsel
            for s in range(nsel):
                nb = sel[s]
                base_nb = _layer_base(adj_off[nb], m, layer)
                dg = deg[deg_off[nb] + layer]
                if dg < cap:
                    adj[base_nb + dg] = i
                    deg[deg_off[nb] + layer] = dg + 1
                else:
                    cd = np.empty(dg + 1, np.float32)
                    ci = np.empty(dg + 1, np.int32)
                    for t in range(dg):
                        ci[t] = adj[base_nb + t]
                        cd[t] = _pair_dist(vectors, nb, ci[t])
                    ci[dg] = i
                    cd[dg] = _pair_dist(vectors, nb, i)
                    _sort_by_dist_id(cd, ci, dg + 1)
                    sel2 = np.empty(cap, np.int32)
                    nsel2 = _select_heuristic(vectors, cd, ci, dg + 1, cap, sel2)
                    for t in range(nsel2):
                        adj[base_nb + t] = sel2[t]
                    deg[deg_off[nb] + layer] = nsel2
            eps = out_i
            layer -= 1
        if l_i > max_level:
            entry = i
            max_level = l_i
    return entry, max_level


@njit(**_JIT)
def _knn_search(vecs, qeff, qconst, adj, adj_off, deg, deg_off, m,
                entry, max_level, k, ef, visited, epoch):
    cur = entry
    for layer in range(max_level, 0, -1):
        cur = _greedy_descent(vecs, qeff, qconst, adj, adj_off, deg, deg_off, m, layer, cur)
    eps = np.empty(1, np.int32)
    eps[0] = cur
    out_d, out_i = _search_layer(
        vecs, qeff, qconst, adj, adj_off, deg, deg_off, m, 0, eps, visited, epoch, ef
    )
    kk = min(k, out_i.shape[0])
    return out_d[:kk], out_i[:kk]
