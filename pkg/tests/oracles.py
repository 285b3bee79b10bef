"""Independent reference implementations used by the tests.

Nothing here touches the path kernels: distances come from a cubic
Floyd-Warshall relaxation and path counts from exhaustive enumeration of
simple paths.
"""

from __future__ import annotations

import math

import numpy as np

from tdcnet.netmodel import EdgeRecord, NodeAttrs, NodeRef, build_network

INF = math.inf


def floyd_warshall(nodes, edges):
    """All-pairs distances as a dict-of-dicts keyed by NodeRef."""
    pos = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    d = [[INF] * n for _ in range(n)]
    for i in range(n):
        d[i][i] = 0.0
    for e in edges:
        a, b = pos[e.a], pos[e.b]
        d[a][b] = min(d[a][b], e.weight)
        d[b][a] = min(d[b][a], e.weight)
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik == INF:
                continue
            di = d[i]
            for j in range(n):
                if dik + dk[j] < di[j]:
                    di[j] = dik + dk[j]
    return {u: {v: d[pos[u]][pos[v]] for v in nodes} for u in nodes}


def adjacency(nodes, edges):
    adj = {n: [] for n in nodes}
    for e in edges:
        adj[e.a].append((e.b, e.weight))
        adj[e.b].append((e.a, e.weight))
    return adj


def simple_paths(adj, s, t):
    """Every simple s-t path as (length, node tuple)."""
    out = []
    stack = [(s, (s,), 0.0)]
    while stack:
        u, path, length = stack.pop()
        if u == t:
            out.append((length, path))
            continue
        for w, wt in adj[u]:
            if w not in path:
                stack.append((w, path + (w,), length + wt))
    return out


def shortest_paths(adj, s, t, tol=1e-9):
    paths = simple_paths(adj, s, t)
    if not paths:
        return []
    best = min(l for l, _ in paths)
    return [p for l, p in paths if abs(l - best) <= tol * max(1.0, best)]


def cross_betweenness(nodes, edges, layer_i, layer_j):
    adj = adjacency(nodes, edges)
    vi = [n for n in nodes if n.layer == layer_i]
    vj = [n for n in nodes if n.layer == layer_j]
    bc = {v: 0.0 for v in vi}
    for p in vi:
        for q in vj:
            paths = shortest_paths(adj, p, q)
            if not paths:
                continue
            for v in vi:
                if v in (p, q):
                    continue
                through = sum(1 for path in paths if v in path[1:-1])
                bc[v] += through / len(paths)
    return bc


def efficiency_sum(dist, vi, vj, k):
    total = 0.0
    for p in vi:
        for q in vj:
            d = dist[p][q]
            if 0 < d < INF:
                total += k[p] / d
    return total


def without(nodes, edges, v):
    keep = [n for n in nodes if n != v]
    return keep, [e for e in edges if v not in (e.a, e.b)]


def efficiency_drop(nodes, edges, v, layer_i, layer_j, k):
    """Rebuild-and-recompute drop with the intact network's normalisation.

    Clamped to [0, 1]: a removal can turn an excluded zero-distance pair into
    a positive-distance one and so raise the sum.
    """
    vi = [n for n in nodes if n.layer == layer_i]
    vj = [n for n in nodes if n.layer == layer_j]
    base = efficiency_sum(floyd_warshall(nodes, edges), vi, vj, k)
    n2, e2 = without(nodes, edges, v)
    after = efficiency_sum(floyd_warshall(n2, e2), [n for n in vi if n != v],
                           [n for n in vj if n != v], k)
    return min(1.0, max(0.0, (base - after) / base))


def closeness(dist, p, vj, n_i):
    bound = n_i + len(vj) - 1
    s = sum(bound if dist[p][q] == INF else dist[p][q] for q in vj)
    return len(vj) / s


# -- random graphs ---------------------------------------------------------------


def has_zero_cycle(nodes, edges):
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        if e.weight == 0:
            ra, rb = find(e.a), find(e.b)
            if ra == rb:
                return True
            parent[ra] = rb
    return False


def random_multilayer(rng: np.random.Generator, n_nodes: int, layers=("A", "B"),
                      p_edge=0.3, weights=(0.0, 0.5, 1.0, 2.0), voltages=None):
    """Random graph whose nodes are spread over ``layers`` (each nonempty).

    Intra edges draw weights from ``weights``; inter edges carry weight 0.
    """
    n_nodes = max(n_nodes, len(layers))
    lay = list(layers) + [layers[int(i)] for i in rng.integers(len(layers), size=n_nodes - len(layers))]
    counters = {l: 0 for l in layers}
    nodes, attrs = [], {}
    for l in lay:
        counters[l] += 1
        ref = NodeRef(l, str(counters[l]))
        nodes.append(ref)
        v = None if voltages is None else float(voltages[int(rng.integers(len(voltages)))])
        attrs[ref] = NodeAttrs(voltage_kv=v)
    edges = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if rng.random() < p_edge:
                a, b = nodes[i], nodes[j]
                w = 0.0 if a.layer != b.layer else float(weights[int(rng.integers(len(weights)))])
                edges.append(EdgeRecord(a, b, weight=w))
    return build_network([(n, attrs[n]) for n in nodes], edges, layers=list(layers))


def net_parts(net):
    return list(net.nodes), list(net.edges)


def random_zero_forest(rng: np.random.Generator, n_nodes: int, **kw):
    """``random_multilayer`` resampled until zero-weight edges form a forest."""
    while True:
        net = random_multilayer(rng, n_nodes, **kw)
        if not has_zero_cycle(list(net.nodes), list(net.edges)):
            return net


def random_sweepable(rng: np.random.Generator, n_nodes: int, layers=("A", "B"), **kw):
    """Zero-forest graph with at least one finite, positive cross distance
    and no source whose distances to the target layer are all zero."""
    while True:
        net = random_zero_forest(rng, n_nodes, layers=layers, **kw)
        fw = floyd_warshall(list(net.nodes), list(net.edges))
        vi, vj = net.layer_nodes(layers[0]), net.layer_nodes(layers[1])
        if (any(0 < fw[p][q] < INF for p in vi for q in vj)
                and not any(all(fw[p][q] == 0 for q in vj) for p in vi)):
            return net
