"""Shortest paths over the supra-graph.

All functions accept a :class:`~tdcnet.netmodel.MultilayerNetwork` or a
:class:`~tdcnet.netmodel.RemovalView`; the heavy lifting happens in
:mod:`tdcnet._kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyLayer, ValidationError
from .netmodel import NodeRef

UNREACHABLE = math.inf
DEFAULT_TOL = 1e-9


def graph_arrays(view):
    """CSR arrays of the underlying network plus the excluded node index."""
    base = view.base
    return base.indptr, base.indices, base.weights, view.excluded


@dataclass(frozen=True)
class DistanceMap:
    source: NodeRef
    nodes: tuple
    index: dict
    values: np.ndarray
    excluded: int = -1

    def __getitem__(self, ref: NodeRef) -> float:
        i = self.index[ref]
        if i == self.excluded:
            raise KeyError(ref)
        return float(self.values[i])

    def as_dict(self) -> dict:
        return {n: float(self.values[i]) for i, n in enumerate(self.nodes) if i != self.excluded}


@dataclass(frozen=True)
class PathCounts:
    source: NodeRef
    nodes: tuple
    index: dict
    sigma: np.ndarray
    excluded: int = -1

    def __getitem__(self, ref: NodeRef) -> float:
        i = self.index[ref]
        if i == self.excluded:
            raise KeyError(ref)
        return float(self.sigma[i])

    def as_dict(self) -> dict:
        return {n: float(self.sigma[i]) for i, n in enumerate(self.nodes) if i != self.excluded}


def shortest_from(view, source: NodeRef) -> DistanceMap:
    s = view.node_index(source)
    indptr, indices, weights, ex = graph_arrays(view)
    dist, _ = _kernels.sssp(indptr, indices, weights, s, ex)
    base = view.base
    return DistanceMap(source, base.nodes, dict(base.index), dist, ex)


def count_shortest(view, source: NodeRef, tol_rel: float = DEFAULT_TOL):
    """Distances and numbers of distinct shortest paths from ``source``.

    Path lengths within ``tol_rel * max(1, length)`` of each other count as
    equal.  Raises :class:`~tdcnet.errors.AmbiguousZeroCycle` when zero-weight
    edges form a cycle.
    """
    if not tol_rel > 0:
        raise ValidationError("tol_rel must be positive")
    s = view.node_index(source)
    indptr, indices, weights, ex = graph_arrays(view)
    dist, sigma = _kernels.path_counts(indptr, indices, weights, s, ex, tol_rel)
    base = view.base
    idx = dict(base.index)
    return (DistanceMap(source, base.nodes, idx, dist, ex),
            PathCounts(source, base.nodes, idx, sigma, ex))


def distance_rows(view, sources: np.ndarray) -> np.ndarray:
    """Full distance rows (one per source index) on ``view``."""
    indptr, indices, weights, ex = graph_arrays(view)
    return _kernels.multi_sssp(indptr, indices, weights, np.asarray(sources, dtype=np.int64), ex)


def cross_distances(net, from_layer: str, to_layer: str) -> np.ndarray:
    """Matrix of supra-graph distances, rows ``from_layer`` nodes and columns
    ``to_layer`` nodes, both in canonical node order."""
    rows = net.layer_indices(from_layer)
    cols = net.layer_indices(to_layer)
    if len(rows) == 0 or len(cols) == 0:
        raise EmptyLayer(f"layer {from_layer if len(rows) == 0 else to_layer!r} is empty")
    return distance_rows(net, rows)[:, cols]
