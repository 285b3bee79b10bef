# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernels.  Semantics mirror ``_fallback.py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY
from libc.stdlib cimport malloc, free, realloc

cnp.import_array()

from tdcnet.errors import AmbiguousZeroCycle as ZeroCycleError

ctypedef cnp.int64_t i64


# -- binary heap keyed on (distance, node) -----------------------------------

cdef struct Heap:
    double *key
    i64 *node
    i64 size
    i64 cap


cdef inline bint _less(double ka, i64 na, double kb, i64 nb) noexcept nogil:
    return ka < kb or (ka == kb and na < nb)


cdef int _heap_init(Heap *h, i64 cap) noexcept nogil:
    h.key = <double *> malloc(cap * sizeof(double))
    h.node = <i64 *> malloc(cap * sizeof(i64))
    h.size = 0
    h.cap = cap
    return 0 if (h.key != NULL and h.node != NULL) else -1


cdef void _heap_free(Heap *h) noexcept nogil:
    free(h.key)
    free(h.node)


cdef int _heap_push(Heap *h, double k, i64 v) noexcept nogil:
    cdef i64 i, p
    if h.size == h.cap:
        h.cap = h.cap * 2 + 16
        h.key = <double *> realloc(h.key, h.cap * sizeof(double))
        h.node = <i64 *> realloc(h.node, h.cap * sizeof(i64))
        if h.key == NULL or h.node == NULL:
            return -1
    i = h.size
    h.size += 1
    while i > 0:
        p = (i - 1) >> 1
        if _less(k, v, h.key[p], h.node[p]):
            h.key[i] = h.key[p]
            h.node[i] = h.node[p]
            i = p
        else:
            break
    h.key[i] = k
    h.node[i] = v
    return 0


cdef void _heap_pop(Heap *h, double *k, i64 *v) noexcept nogil:
    cdef i64 i, c, n
    cdef double lk
    cdef i64 ln
    k[0] = h.key[0]
    v[0] = h.node[0]
    h.size -= 1
    n = h.size
    if n == 0:
        return
    lk = h.key[n]
    ln = h.node[n]
    i = 0
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and _less(h.key[c + 1], h.node[c + 1], h.key[c], h.node[c]):
            c += 1
        if _less(h.key[c], h.node[c], lk, ln):
            h.key[i] = h.key[c]
            h.node[i] = h.node[c]
            i = c
        else:
            break
    h.key[i] = lk
    h.node[i] = ln


cdef i64 _dijkstra(const i64[::1] ptr, const i64[::1] idx, const double[::1] wts,
                   i64 source, i64 excluded, double[::1] dist, char *done,
                   i64[::1] order, Heap *h) noexcept nogil:
    """Fills ``dist`` and ``order``; returns the number of settled nodes."""
    cdef i64 n = dist.shape[0]
    cdef i64 i, k, u, w, nset = 0
    cdef double d, nd
    for i in range(n):
        dist[i] = INFINITY
        done[i] = 0
    h.size = 0
    if source == excluded:
        return 0
    dist[source] = 0.0
    _heap_push(h, 0.0, source)
    while h.size > 0:
        _heap_pop(h, &d, &u)
        if done[u]:
            continue
        done[u] = 1
        order[nset] = u
        nset += 1
        for k in range(ptr[u], ptr[u + 1]):
            w = idx[k]
            if w == excluded or done[w]:
                continue
            nd = d + wts[k]
            if nd < dist[w]:
                dist[w] = nd
                _heap_push(h, nd, w)
    return nset


def _as_i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sssp(indptr, indices, weights, i64 source, i64 excluded=-1):
    cdef const i64[::1] ptr = _as_i64(indptr)
    cdef const i64[::1] idx = _as_i64(indices)
    cdef const double[::1] wts = _as_f64(weights)
    cdef i64 n = ptr.shape[0] - 1
    dist_a = np.empty(n, dtype=np.float64)
    order_a = np.empty(n, dtype=np.int64)
    cdef double[::1] dist = dist_a
    cdef i64[::1] order = order_a
    cdef char *done = <char *> malloc(n + 1)
    cdef Heap h
    cdef i64 nset
    _heap_init(&h, n + 16)
    with nogil:
        nset = _dijkstra(ptr, idx, wts, source, excluded, dist, done, order, &h)
    _heap_free(&h)
    free(done)
    return dist_a, order_a[:nset].copy()


def multi_sssp(indptr, indices, weights, sources, excluded=-1):
    cdef const i64[::1] ptr = _as_i64(indptr)
    cdef const i64[::1] idx = _as_i64(indices)
    cdef const double[::1] wts = _as_f64(weights)
    cdef const i64[::1] src = _as_i64(sources)
    cdef i64 n = ptr.shape[0] - 1
    cdef i64 ns = src.shape[0]
    out_a = np.empty((ns, n), dtype=np.float64)
    cdef double[:, ::1] out = out_a
    order_a = np.empty(n, dtype=np.int64)
    cdef i64[::1] order = order_a
    cdef char *done = <char *> malloc(n + 1)
    cdef Heap h
    cdef i64 r
    cdef i64 ex = excluded
    _heap_init(&h, n + 16)
    with nogil:
        for r in range(ns):
            _dijkstra(ptr, idx, wts, src[r], ex, out[r], done, order, &h)
    _heap_free(&h)
    free(done)
    return out_a


cdef double _inner_sum(const double[::1] dist, const i64[::1] targets,
                       const double[::1] tcoef) noexcept nogil:
    cdef double acc = 0.0, d
    cdef i64 k
    for k in range(targets.shape[0]):
        d = dist[targets[k]]
        if 0.0 < d < INFINITY:
            acc += tcoef[k] / d
    return acc


def inner_sums(dist_matrix, targets, tcoef):
    cdef const double[:, ::1] dm = _as_f64(dist_matrix)
    cdef const i64[::1] tg = _as_i64(targets)
    cdef const double[::1] tc = _as_f64(tcoef)
    out_a = np.empty(dm.shape[0], dtype=np.float64)
    cdef double[::1] out = out_a
    cdef i64 r
    with nogil:
        for r in range(dm.shape[0]):
            out[r] = _inner_sum(dm[r], tg, tc)
    return out_a


def removal_sums(indptr, indices, weights, sources, scoef, targets, tcoef,
                 base_dist, base_inner, removed):
    cdef const i64[::1] ptr = _as_i64(indptr)
    cdef const i64[::1] idx = _as_i64(indices)
    cdef const double[::1] wts = _as_f64(weights)
    cdef const i64[::1] src = _as_i64(sources)
    cdef const double[::1] sc = _as_f64(scoef)
    cdef const i64[::1] tg = _as_i64(targets)
    cdef const double[::1] tc = _as_f64(tcoef)
    cdef const double[:, ::1] base = _as_f64(base_dist)
    cdef const double[::1] inner = _as_f64(base_inner)
    cdef const i64[::1] rem = _as_i64(removed)
    cdef i64 n = ptr.shape[0] - 1
    out_a = np.empty(rem.shape[0], dtype=np.float64)
    cdef double[::1] out = out_a
    # coefficient of each node as a target (NaN marks non-targets)
    tpos_a = np.full(n, np.nan)
    for k in range(tg.shape[0]):
        tpos_a[tg[k]] = tc[k]
    cdef const double[::1] tpos = tpos_a
    dist_a = np.empty(n, dtype=np.float64)
    cdef double[::1] dist = dist_a
    order_a = np.empty(n, dtype=np.int64)
    cdef i64[::1] order = order_a
    cdef char *done = <char *> malloc(n + 1)
    cdef Heap h
    cdef i64 r, si, s, v, kk
    cdef double total, dv, acc
    cdef bint affected
    _heap_init(&h, n + 16)
    with nogil:
        for r in range(rem.shape[0]):
            v = rem[r]
            total = 0.0
            for si in range(src.shape[0]):
                s = src[si]
                if s == v:
                    continue
                dv = base[si, v]
                affected = False
                if dv < INFINITY:
                    for kk in range(ptr[v], ptr[v + 1]):
                        if dv + wts[kk] <= base[si, idx[kk]]:
                            affected = True
                            break
                if affected:
                    _dijkstra(ptr, idx, wts, s, v, dist, done, order, &h)
                    acc = _inner_sum(dist, tg, tc)
                else:
                    acc = inner[si]
                    if tpos[v] == tpos[v] and 0.0 < dv < INFINITY:
                        acc = acc - tpos[v] / dv
                total += sc[si] * acc
            out[r] = total
    _heap_free(&h)
    free(done)
    return out_a


# -- zero-weight plateaus ------------------------------------------------------

def zero_forest(indptr, indices, weights, i64 excluded=-1):
    cdef const i64[::1] ptr = _as_i64(indptr)
    cdef const i64[::1] idx = _as_i64(indices)
    cdef const double[::1] wts = _as_f64(weights)
    cdef i64 n = ptr.shape[0] - 1
    comp_a = np.full(n, -1, dtype=np.int64)
    parent_a = np.full(n, -1, dtype=np.int64)
    members_a = np.empty(n, dtype=np.int64)
    starts_a = np.empty(n + 1, dtype=np.int64)
    cdef i64[::1] comp = comp_a
    cdef i64[::1] parent = parent_a
    cdef i64[::1] members = members_a
    cdef i64[::1] starts = starts_a
    cdef i64 root, head, tail = 0, c = 0, u, w, k
    cdef i64 bad_u = -1, bad_w = -1
    starts[0] = 0
    with nogil:
        for root in range(n):
            if root == excluded or comp[root] != -1:
                continue
            comp[root] = c
            members[tail] = root
            head = tail
            tail += 1
            while head < tail and bad_u < 0:
                u = members[head]
                head += 1
                for k in range(ptr[u], ptr[u + 1]):
                    if wts[k] != 0.0:
                        continue
                    w = idx[k]
                    if w == excluded or w == parent[u]:
                        continue
                    if comp[w] != -1:
                        bad_u = u
                        bad_w = w
                        break
                    comp[w] = c
                    parent[w] = u
                    members[tail] = w
                    tail += 1
            if bad_u >= 0:
                break
            c += 1
            starts[c] = tail
    if bad_u >= 0:
        raise ZeroCycleError(f"zero-weight cycle through nodes {bad_u} and {bad_w}")
    return comp_a, parent_a, members_a[:tail].copy(), starts_a[:c + 1].copy()


cdef i64 _forward(const i64[::1] ptr, const i64[::1] idx, const double[::1] wts,
                  const double[::1] dist, const i64[::1] order, i64 nset, i64 source,
                  const i64[::1] comp, const i64[::1] members, const i64[::1] starts,
                  double tol, double[::1] ext, double[::1] total, char *seen,
                  i64[::1] comp_order) noexcept nogil:
    cdef i64 ncomp = starts.shape[0] - 1
    cdef i64 i, x, c, j, m, k, u, nco = 0
    cdef double tot, dm, acc, lim, w, du
    for i in range(ncomp):
        seen[i] = 0
    for i in range(nset):
        x = order[i]
        c = comp[x]
        if seen[c]:
            continue
        seen[c] = 1
        comp_order[nco] = c
        nco += 1
        tot = 0.0
        for j in range(starts[c], starts[c + 1]):
            m = members[j]
            dm = dist[m]
            acc = 1.0 if m == source else 0.0
            lim = tol * (dm if dm > 1.0 else 1.0)
            for k in range(ptr[m], ptr[m + 1]):
                w = wts[k]
                if w <= 0.0:
                    continue
                u = idx[k]
                du = dist[u]
                if du < dm and du + w - dm <= lim:
                    acc += total[comp[u]]
            ext[m] = acc
            tot += acc
        total[c] = tot
    return nco


def path_counts(indptr, indices, weights, source, excluded=-1, tol=1e-9):
    comp_a, parent_a, members_a, starts_a = zero_forest(indptr, indices, weights, excluded)
    cdef const i64[::1] ptr = _as_i64(indptr)
    cdef const i64[::1] idx = _as_i64(indices)
    cdef const double[::1] wts = _as_f64(weights)
    cdef const i64[::1] comp = comp_a
    cdef const i64[::1] members = members_a
    cdef const i64[::1] starts = starts_a
    cdef i64 n = ptr.shape[0] - 1
    cdef i64 ncomp = starts.shape[0] - 1
    dist_a = np.empty(n, dtype=np.float64)
    sigma_a = np.zeros(n, dtype=np.float64)
    cdef double[::1] dist = dist_a
    cdef double[::1] sigma = sigma_a
    order_a = np.empty(n, dtype=np.int64)
    cdef i64[::1] order = order_a
    ext_a = np.zeros(n, dtype=np.float64)
    total_a = np.zeros(max(ncomp, 1), dtype=np.float64)
    co_a = np.empty(max(ncomp, 1), dtype=np.int64)
    cdef double[::1] ext = ext_a
    cdef double[::1] total = total_a
    cdef i64[::1] comp_order = co_a
    cdef char *done = <char *> malloc(n + 1)
    cdef char *seen = <char *> malloc(ncomp + 1)
    cdef Heap h
    cdef i64 nset, i
    cdef i64 s = source
    cdef i64 ex = excluded
    cdef double t = tol
    _heap_init(&h, n + 16)
    with nogil:
        nset = _dijkstra(ptr, idx, wts, s, ex, dist, done, order, &h)
        _forward(ptr, idx, wts, dist, order, nset, s, comp, members, starts, t,
                 ext, total, seen, comp_order)
        for i in range(n):
            if dist[i] < INFINITY:
                sigma[i] = total[comp[i]]
    _heap_free(&h)
    free(done)
    free(seen)
    return dist_a, sigma_a


def brandes(indptr, indices, weights, sources, target_mask, excluded=-1, tol=1e-9):
    comp_a, parent_a, members_a, starts_a = zero_forest(indptr, indices, weights, excluded)
    cdef const i64[::1] ptr = _as_i64(indptr)
    cdef const i64[::1] idx = _as_i64(indices)
    cdef const double[::1] wts = _as_f64(weights)
    cdef const i64[::1] src = _as_i64(sources)
    cdef const i64[::1] comp = comp_a
    cdef const i64[::1] parent = parent_a
    cdef const i64[::1] members = members_a
    cdef const i64[::1] starts = starts_a
    tm_a = np.ascontiguousarray(target_mask, dtype=np.int8)
    cdef const cnp.int8_t[::1] tmask = tm_a
    cdef i64 n = ptr.shape[0] - 1
    cdef i64 ncomp = starts.shape[0] - 1
    bc_a = np.zeros(n, dtype=np.float64)
    cdef double[::1] bc = bc_a
    dist_a = np.empty(n, dtype=np.float64)
    cdef double[::1] dist = dist_a
    order_a = np.empty(n, dtype=np.int64)
    cdef i64[::1] order = order_a
    bufs = np.zeros((5, n), dtype=np.float64)
    cdef double[::1] ext = bufs[0]
    cdef double[::1] P = bufs[1]
    cdef double[::1] up = bufs[2]
    cdef double[::1] sub = bufs[3]
    cdef double[::1] delta = bufs[4]
    total_a = np.zeros(max(ncomp, 1), dtype=np.float64)
    pk_a = np.zeros(max(ncomp, 1), dtype=np.float64)
    co_a = np.empty(max(ncomp, 1), dtype=np.int64)
    cdef double[::1] total = total_a
    cdef double[::1] pk = pk_a
    cdef i64[::1] comp_order = co_a
    cdef char *done = <char *> malloc(n + 1)
    cdef char *seen = <char *> malloc(ncomp + 1)
    cdef Heap h
    cdef i64 si, s, nset, nco, ci, c, j, m, k, u, lo, hi, p
    cdef i64 ex = excluded
    cdef double t = tol
    cdef double tot, acc_c, acc, dm, du, w, d
    _heap_init(&h, n + 16)
    with nogil:
        for si in range(src.shape[0]):
            s = src[si]
            nset = _dijkstra(ptr, idx, wts, s, ex, dist, done, order, &h)
            nco = _forward(ptr, idx, wts, dist, order, nset, s, comp, members, starts, t,
                           ext, total, seen, comp_order)
            for ci in range(nco - 1, -1, -1):
                c = comp_order[ci]
                tot = total[c]
                acc_c = 0.0
                lo = starts[c]
                hi = starts[c + 1]
                for j in range(lo, hi):
                    m = members[j]
                    dm = dist[m]
                    acc = 1.0 / tot if (tmask[m] and m != s) else 0.0
                    for k in range(ptr[m], ptr[m + 1]):
                        w = wts[k]
                        if w <= 0.0:
                            continue
                        u = idx[k]
                        du = dist[u]
                        if du > dm and du < INFINITY and dm + w - du <= t * (du if du > 1.0 else 1.0):
                            acc += pk[comp[u]]
                    P[m] = acc
                    up[m] = ext[m]
                    sub[m] = acc
                    acc_c += acc
                pk[c] = acc_c
                for j in range(hi - 1, lo, -1):
                    m = members[j]
                    p = parent[m]
                    up[p] += up[m]
                    sub[p] += sub[m]
                for j in range(lo, hi):
                    m = members[j]
                    delta[m] = ext[m] * acc_c
                for j in range(lo + 1, hi):
                    m = members[j]
                    p = parent[m]
                    delta[m] += (tot - up[m]) * sub[m]
                    delta[p] += up[m] * (acc_c - sub[m])
                for j in range(lo, hi):
                    m = members[j]
                    if m == s:
                        continue
                    d = delta[m]
                    if tmask[m]:
                        d -= 1.0
                    bc[m] += d
    _heap_free(&h)
    free(done)
    free(seen)
    return bc_a
