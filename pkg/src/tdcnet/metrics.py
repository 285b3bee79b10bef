"""Per-layer and cross-layer importance metrics.

Cross metrics are evaluated on the whole supra-graph: a path from layer i to
layer j may pass through any layer.  Per-layer metrics (degree distribution,
network efficiency) are evaluated on the isolated layer subgraph.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from .errors import (
    DegenerateSum,
    EmptyLayer,
    InvalidDirection,
    TooFewNodes,
    UnknownNode,
    ValidationError,
    ZeroBaseEfficiency,
)
from .netmodel import MultilayerNetwork, NodeRef, layer_subgraph
from .paths import DEFAULT_TOL, distance_rows, graph_arrays

_ROW_CHUNK = 256


@dataclass(frozen=True)
class DegreePmf:
    bins: dict
    n: int
    k_avg: float
    k_max: int


@dataclass(frozen=True)
class VoltageCoefficient:
    """Per-node coefficient for cross-efficiency.

    Nodes with a nominal voltage use it (kV); nodes without one (communication
    nodes) use ``comm_default``.  ``overrides`` pins individual nodes and
    ``factor`` rescales everything.
    """

    comm_default: float = 1.0
    overrides: Mapping[NodeRef, float] = field(default_factory=dict)
    factor: float = 1.0
    use_voltage: bool = True

    def value(self, net, ref: NodeRef) -> float:
        if ref in self.overrides:
            k = float(self.overrides[ref])
        else:
            v = net.base.attrs[ref].voltage_kv if self.use_voltage else None
            k = float(v) if v else self.comm_default
        k *= self.factor
        if not (k > 0 and math.isfinite(k)):
            raise ValidationError(f"coefficient for {ref} must be positive, got {k}")
        return k

    def values(self, net, indices) -> np.ndarray:
        nodes = net.base.nodes
        return np.array([self.value(net, nodes[i]) for i in indices], dtype=np.float64)

    def scaled(self, c: float) -> "VoltageCoefficient":
        return VoltageCoefficient(self.comm_default, self.overrides, self.factor * c, self.use_voltage)


UNIT_K = VoltageCoefficient(use_voltage=False)


# -- per-layer properties -------------------------------------------------------


def _single_layer(net, layer):
    if layer is None:
        if len(net.layers) != 1:
            raise ValidationError("network has several layers; pass `layer`")
        return net
    if len(net.layers) == 1 and net.layers[0] == layer:
        return net
    return layer_subgraph(net, layer)


def degree_pmf(layer_net: MultilayerNetwork, layer: str | None = None) -> DegreePmf:
    """Empirical distribution of intra-layer degree (parallel circuits count)."""
    g = _single_layer(layer_net, layer)
    lname = g.layers[0]
    nodes = g.layer_nodes(lname)
    if not nodes:
        raise EmptyLayer(f"layer {lname!r} is empty")
    deg = Counter({n: 0 for n in nodes})
    for e in g.intra_edges(lname):
        deg[e.a] += e.circuits
        deg[e.b] += e.circuits
    n = len(nodes)
    hist = Counter(deg.values())
    bins = {k: hist[k] / n for k in sorted(hist)}
    _, m = g.layer_counts(lname)
    return DegreePmf(bins=bins, n=n, k_avg=2.0 * m / n, k_max=max(hist))


def network_efficiency(layer_net: MultilayerNetwork, layer: str | None = None) -> float:
    """Mean of 1/d over ordered pairs of distinct nodes.

    Unreachable pairs (and zero-length pairs joined by zero-weight jumpers)
    contribute 0.
    """
    g = _single_layer(layer_net, layer)
    n = g.n_nodes
    if n < 2:
        raise TooFewNodes("network efficiency needs at least two nodes")
    allidx = np.arange(n, dtype=np.int64)
    ones = np.ones(n)
    total = 0.0
    for lo in range(0, n, _ROW_CHUNK):
        rows = distance_rows(g, allidx[lo:lo + _ROW_CHUNK])
        total += math.fsum(_kernels.inner_sums(rows, allidx, ones))
    return total / (n * (n - 1))


# -- cross-layer metrics ---------------------------------------------------------


def _layer_pair(net, layer_i, layer_j, allow_same=False):
    idx_i = net.layer_indices(layer_i)
    idx_j = net.layer_indices(layer_j)
    if layer_i == layer_j and not allow_same:
        raise InvalidDirection(f"cross metrics need two distinct layers, got {layer_i}->{layer_j}")
    if len(idx_i) == 0 or len(idx_j) == 0:
        raise EmptyLayer(f"layer {layer_i if len(idx_i) == 0 else layer_j!r} is empty")
    return idx_i, idx_j


def closeness_from_rows(rows: np.ndarray, n_i: int, n_j: int) -> np.ndarray:
    """Cross-closeness per row of a (sources x targets) distance matrix."""
    bound = float(n_i + n_j - 1)
    d = np.where(np.isinf(rows), bound, rows)
    sums = d.sum(axis=1)
    if np.any(sums == 0):
        raise DegenerateSum("all distances to the target layer are zero")
    return n_j / sums


def cross_closeness(net, p: NodeRef, target_layer: str) -> float:
    """N_j divided by the summed distances from ``p`` to the target layer;
    unreachable targets count as ``N_i + N_j - 1``."""
    i = net.node_index(p)
    if p.layer == target_layer:
        raise InvalidDirection(f"{p} already belongs to layer {target_layer}")
    cols = net.layer_indices(target_layer)
    if len(cols) == 0:
        raise EmptyLayer(f"layer {target_layer!r} is empty")
    n_i = len(net.layer_indices(p.layer))
    row = distance_rows(net, np.array([i]))[:, cols]
    return float(closeness_from_rows(row, n_i, len(cols))[0])


def cross_closeness_all(net, layer_i: str, layer_j: str, allow_same=False) -> dict:
    idx_i, idx_j = _layer_pair(net, layer_i, layer_j, allow_same)
    vals = closeness_from_rows(distance_rows(net, idx_i)[:, idx_j], len(idx_i), len(idx_j))
    nodes = net.base.nodes
    return {nodes[i]: float(c) for i, c in zip(idx_i, vals)}


def cross_betweenness(net, layer_i: str, layer_j: str, tol: float = DEFAULT_TOL,
                      allow_same=False) -> dict:
    """For each node v of layer i, the sum over pairs (p in i, q in j) with
    p != v != q of the share of shortest p-q paths through v."""
    idx_i, idx_j = _layer_pair(net, layer_i, layer_j, allow_same)
    indptr, indices, weights, ex = graph_arrays(net)
    mask = np.zeros(net.base.n_nodes, dtype=np.int8)
    mask[idx_j] = 1
    bc = _kernels.brandes(indptr, indices, weights, idx_i, mask, ex, tol)
    nodes = net.base.nodes
    return {nodes[i]: float(bc[i]) for i in idx_i}


@dataclass(frozen=True)
class EfficiencyPlan:
    """Source/target orientation for summing k_p / d_pq.

    Distances are symmetric, so the sum runs from whichever side is smaller.
    """

    sources: np.ndarray
    scoef: np.ndarray
    targets: np.ndarray
    tcoef: np.ndarray
    denominator: float


def efficiency_plan(net, layer_i, layer_j, k: VoltageCoefficient, allow_same=False) -> EfficiencyPlan:
    idx_i, idx_j = _layer_pair(net, layer_i, layer_j, allow_same)
    k_i = k.values(net, idx_i)
    pairs = len(idx_i) * (len(idx_i) - 1) if layer_i == layer_j else len(idx_i) * len(idx_j)
    denom = pairs * float(np.mean(k_i))
    if len(idx_i) <= len(idx_j):
        return EfficiencyPlan(idx_i, k_i, idx_j, np.ones(len(idx_j)), denom)
    return EfficiencyPlan(idx_j, np.ones(len(idx_j)), idx_i, k_i, denom)


def efficiency_sum(view, plan: EfficiencyPlan) -> float:
    """Sum of k_p / d_pq over finite, positive-distance pairs on ``view``."""
    ex = view.excluded
    keep_s = plan.sources != ex
    keep_t = plan.targets != ex
    sources, scoef = plan.sources[keep_s], plan.scoef[keep_s]
    targets, tcoef = plan.targets[keep_t], plan.tcoef[keep_t]
    if len(sources) == 0:
        return 0.0
    inner = _kernels.inner_sums(distance_rows(view, sources), targets, tcoef)
    total = 0.0
    for c, a in zip(scoef.tolist(), inner.tolist()):
        total += c * a
    return total


def cross_efficiency(net, layer_i: str, layer_j: str, k: VoltageCoefficient | None = None,
                     allow_same=False) -> float:
    """Coefficient-weighted mean of 1/d between two layers:
    ``sum k_p / d_pq / (N_i * N_j * mean(k))``; with ``layer_i == layer_j``
    (and ``allow_same``) the pairs are ordered distinct pairs of one layer."""
    k = k or VoltageCoefficient()
    plan = efficiency_plan(net, layer_i, layer_j, k, allow_same)
    return efficiency_sum(net, plan) / plan.denominator


def drop_ratio(base_sum: float, removed_sum: float) -> float:
    if base_sum <= 0:
        raise ZeroBaseEfficiency("cross-efficiency of the intact network is zero")
    r = (base_sum - removed_sum) / base_sum
    return min(1.0, max(0.0, r))


def efficiency_drop(net, v: NodeRef, layer_i: str, layer_j: str,
                    k: VoltageCoefficient | None = None, allow_same=False) -> float:
    """Relative cross-efficiency loss when ``v`` is deleted.

    The normalisation of the intact network is kept after the removal, so the
    result lies in [0, 1] and equals 1 exactly when no finite pair remains.
    """
    if not net.has_node(v):
        raise UnknownNode(f"unknown node {v}")
    if v.layer != layer_i:
        raise ValidationError(f"{v} is not in layer {layer_i}")
    k = k or VoltageCoefficient()
    plan = efficiency_plan(net, layer_i, layer_j, k, allow_same)
    base = efficiency_sum(net, plan)
    if base <= 0:
        raise ZeroBaseEfficiency("cross-efficiency of the intact network is zero")
    return drop_ratio(base, efficiency_sum(net.without(v), plan))
