"""Pure-Python path kernels.

Reference implementation of the compiled core in ``_core.pyx``; both must
return bit-identical results.  Graphs are CSR triples ``(indptr, indices,
weights)``; ``excluded`` is a node index treated as absent (``-1`` for none).

Path counting handles zero-weight edges by collapsing each zero-weight
component (required to be a tree) into one plateau: every member shares the
same distance and path count, and a shortest path crosses a plateau along the
unique tree path between its entry and exit members.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from ..errors import AmbiguousZeroCycle as ZeroCycleError

INF = math.inf


def _lists(indptr, indices, weights):
    return indptr.tolist(), indices.tolist(), weights.tolist()


def _dijkstra(ptr, idx, wts, n, source, excluded):
    dist = [INF] * n
    done = [False] * n
    order = []
    if source == excluded:
        return dist, order
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        order.append(u)
        for k in range(ptr[u], ptr[u + 1]):
            w = idx[k]
            if w == excluded or done[w]:
                continue
            nd = d + wts[k]
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist, order


def sssp(indptr, indices, weights, source, excluded=-1):
    """Single-source distances (``inf`` when unreachable) and settle order."""
    ptr, idx, wts = _lists(indptr, indices, weights)
    dist, order = _dijkstra(ptr, idx, wts, len(ptr) - 1, int(source), int(excluded))
    return np.array(dist, dtype=np.float64), np.array(order, dtype=np.int64)


def multi_sssp(indptr, indices, weights, sources, excluded=-1):
    ptr, idx, wts = _lists(indptr, indices, weights)
    n = len(ptr) - 1
    out = np.empty((len(sources), n), dtype=np.float64)
    for r, s in enumerate(np.asarray(sources).tolist()):
        out[r] = _dijkstra(ptr, idx, wts, n, s, int(excluded))[0]
    return out


def _inner_sum(dist, targets, tcoef):
    acc = 0.0
    for t, c in zip(targets, tcoef):
        d = dist[t]
        if 0.0 < d < INF:
            acc += c / d
    return acc


def inner_sums(dist_matrix, targets, tcoef):
    """Per-row sum of ``tcoef[t] / d[t]`` over targets with 0 < d < inf."""
    targets = np.asarray(targets).tolist()
    tcoef = np.asarray(tcoef, dtype=np.float64).tolist()
    return np.array([_inner_sum(row, targets, tcoef) for row in dist_matrix.tolist()],
                    dtype=np.float64)


def removal_sums(indptr, indices, weights, sources, scoef, targets, tcoef,
                 base_dist, base_inner, removed):
    """Sum over sources of ``scoef[s] * inner_s`` with each node of ``removed``
    deleted in turn.  Sources whose shortest-path structure cannot route
    through the removed node reuse their base row."""
    ptr, idx, wts = _lists(indptr, indices, weights)
    n = len(ptr) - 1
    sources = np.asarray(sources).tolist()
    scoef = np.asarray(scoef, dtype=np.float64).tolist()
    targets = np.asarray(targets).tolist()
    tcoef_l = np.asarray(tcoef, dtype=np.float64).tolist()
    tpos = {t: c for t, c in zip(targets, tcoef_l)}
    base = base_dist.tolist()
    inner = np.asarray(base_inner, dtype=np.float64).tolist()
    out = np.empty(len(removed), dtype=np.float64)
    for r, v in enumerate(np.asarray(removed).tolist()):
        total = 0.0
        for si, s in enumerate(sources):
            if s == v:
                continue
            row = base[si]
            dv = row[v]
            affected = False
            if dv < INF:
                for k in range(ptr[v], ptr[v + 1]):
                    if dv + wts[k] <= row[idx[k]]:
                        affected = True
                        break
            if affected:
                dist = _dijkstra(ptr, idx, wts, n, s, v)[0]
                acc = _inner_sum(dist, targets, tcoef_l)
            else:
                acc = inner[si]
                if v in tpos and 0.0 < dv < INF:
                    acc = acc - tpos[v] / dv
            total += scoef[si] * acc
        out[r] = total
    return out


# -- zero-weight plateaus and path counting ----------------------------------


def zero_forest(indptr, indices, weights, excluded=-1):
    """Components of the zero-weight subgraph.

    Returns ``(comp, parent, members, starts)``: component id per node
    (``-1`` for the excluded node), BFS parent inside the component, members
    concatenated in BFS order and component offsets into ``members``.
    Raises :class:`ZeroCycleError` when a zero-weight cycle exists.
    """
    ptr, idx, wts = _lists(indptr, indices, weights)
    n = len(ptr) - 1
    comp = [-1] * n
    parent = [-1] * n
    members = []
    starts = [0]
    c = 0
    for root in range(n):
        if root == excluded or comp[root] != -1:
            continue
        comp[root] = c
        members.append(root)
        head = len(members) - 1
        while head < len(members):
            u = members[head]
            head += 1
            for k in range(ptr[u], ptr[u + 1]):
                if wts[k] != 0.0:
                    continue
                w = idx[k]
                if w == excluded or w == parent[u]:
                    continue
                if comp[w] != -1:
                    raise ZeroCycleError(f"zero-weight cycle through nodes {u} and {w}")
                comp[w] = c
                parent[w] = u
                members.append(w)
        starts.append(len(members))
        c += 1
    return (np.array(comp, dtype=np.int64), np.array(parent, dtype=np.int64),
            np.array(members, dtype=np.int64), np.array(starts, dtype=np.int64))


def _forward(ptr, idx, wts, dist, order, source, comp, members, starts, tol):
    """Plateau path counts.  Returns (ext, total, comp_order)."""
    n = len(dist)
    ext = [0.0] * n
    total = [0.0] * (len(starts) - 1)
    seen = [False] * (len(starts) - 1)
    comp_order = []
    for x in order:
        c = comp[x]
        if seen[c]:
            continue
        seen[c] = True
        comp_order.append(c)
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
    return ext, total, comp_order


def path_counts(indptr, indices, weights, source, excluded=-1, tol=1e-9):
    """Distances and shortest-path counts from ``source``."""
    ptr, idx, wts = _lists(indptr, indices, weights)
    n = len(ptr) - 1
    comp, _, members, starts = (a.tolist() for a in zero_forest(indptr, indices, weights, excluded))
    dist, order = _dijkstra(ptr, idx, wts, n, int(source), int(excluded))
    _, total, _ = _forward(ptr, idx, wts, dist, order, int(source), comp, members, starts, tol)
    sigma = [total[comp[i]] if dist[i] < INF else 0.0 for i in range(n)]
    return np.array(dist, dtype=np.float64), np.array(sigma, dtype=np.float64)


def brandes(indptr, indices, weights, sources, target_mask, excluded=-1, tol=1e-9):
    """Summed pair dependencies ``sum_s sum_t sigma_st(v) / sigma_st`` over
    ``sources`` and targets flagged in ``target_mask``, counting only ``v``
    strictly inside the path."""
    ptr, idx, wts = _lists(indptr, indices, weights)
    n = len(ptr) - 1
    comp, parent, members, starts = (a.tolist() for a in
                                     zero_forest(indptr, indices, weights, excluded))
    tmask = np.asarray(target_mask, dtype=bool).tolist()
    ncomp = len(starts) - 1
    bc = [0.0] * n
    for s in np.asarray(sources).tolist():
        dist, order = _dijkstra(ptr, idx, wts, n, s, int(excluded))
        ext, total, comp_order = _forward(ptr, idx, wts, dist, order, s, comp, members, starts, tol)
        pk = [0.0] * ncomp
        P = [0.0] * n
        up = [0.0] * n
        sub = [0.0] * n
        delta = [0.0] * n
        for c in reversed(comp_order):
            tot = total[c]
            acc_c = 0.0
            for j in range(starts[c], starts[c + 1]):
                m = members[j]
                dm = dist[m]
                acc = 1.0 / tot if (tmask[m] and m != s) else 0.0
                for k in range(ptr[m], ptr[m + 1]):
                    w = wts[k]
                    if w <= 0.0:
                        continue
                    u = idx[k]
                    du = dist[u]
                    if du > dm and du < INF and dm + w - du <= tol * (du if du > 1.0 else 1.0):
                        acc += pk[comp[u]]
                P[m] = acc
                up[m] = ext[m]
                sub[m] = acc
                acc_c += acc
            pk[c] = acc_c
            lo, hi = starts[c], starts[c + 1]
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
    return np.array(bc, dtype=np.float64)
