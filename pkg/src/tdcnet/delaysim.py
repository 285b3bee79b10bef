"""Packet-delay proxy over the communication layer.

Packets follow minimum-hop routes.  Each hop costs ``per_hop_base_ms`` times
``1 + u`` with ``u`` uniform in ``[0, jitter_fraction]``, drawn per hop and
per trial.  A pair's delay is the median over trials and a network's delay
is the median over reachable unordered pairs.

Each pair owns a random stream derived from the seed and the two node names,
and the delay of an ``h``-hop route uses the first ``h`` draws of that
stream.  So results do not depend on evaluation order or on which other
nodes exist, removals only lengthen delays, and pairs whose hop count is
unchanged by a removal keep exactly the same delay.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NoReachablePairs, ValidationError
from .netmodel import NodeRef, name_key

_PAIR_STREAM = 3


@dataclass(frozen=True)
class DelayModel:
    per_hop_base_ms: float = 1.0
    jitter_fraction: float = 0.1
    trials: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.per_hop_base_ms > 0 and math.isfinite(self.per_hop_base_ms)):
            raise ValidationError("per_hop_base_ms must be positive")
        if not (0.0 <= self.jitter_fraction < 1.0):
            raise ValidationError("jitter_fraction must lie in [0, 1)")
        if int(self.trials) < 1 or int(self.trials) != self.trials:
            raise ValidationError("trials must be an integer >= 1")


@dataclass(frozen=True)
class RemovalDelay:
    node: NodeRef
    reference_ms: float  # baseline median over pairs not involving ``node``
    median_ms: float  # NaN when no pair stays reachable
    delta_ms: float
    unreachable_pairs: int  # pairs reachable before, unreachable after (removed node excluded)


@dataclass
class DelayReport:
    baseline_ms: float
    baseline_pairs: int
    rows: list  # RemovalDelay, ranked
    model: DelayModel = field(repr=False, default=None)

    def ranking(self) -> list[NodeRef]:
        return [r.node for r in self.rows]


def _comm_graph(c_layer, layer: str | None):
    """Adjacency lists over the intra edges of one layer."""
    if layer is None:
        if len(c_layer.layers) != 1:
            layer = "C"
        else:
            layer = c_layer.layers[0]
    nodes = c_layer.layer_nodes(layer)
    pos = {r: i for i, r in enumerate(nodes)}
    adj = [[] for _ in nodes]
    for e in c_layer.intra_edges(layer):
        a, b = pos[e.a], pos[e.b]
        adj[a].append(b)
        adj[b].append(a)
    for lst in adj:
        lst.sort()
    return nodes, adj


def hop_matrix(adj, excluded: int = -1) -> np.ndarray:
    """All-pairs hop counts by BFS; -1 marks unreachable."""
    n = len(adj)
    out = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        if s == excluded:
            continue
        row = out[s]
        row[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w != excluded and row[w] < 0:
                    row[w] = row[u] + 1
                    q.append(w)
    return out


def _name_entropy(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")


class _PairDelays:
    """Per-pair median delay as a function of hop count, cached per pair."""

    def __init__(self, model: DelayModel, nodes):
        self.m = model
        self.cache: dict = {}
        self.keys = [(name_key(r.name), _name_entropy(r.name)) for r in nodes]

    def _stream(self, i: int, j: int) -> np.random.Generator:
        a, b = sorted((self.keys[i], self.keys[j]))
        return np.random.default_rng(np.random.SeedSequence([int(self.m.rng_seed), _PAIR_STREAM,
                                                              a[1], b[1]]))

    def median(self, i: int, j: int, hops: int) -> float:
        m = self.m
        if m.jitter_fraction == 0.0:
            return m.per_hop_base_ms * hops
        ent = self.cache.get((i, j))
        if ent is None or ent[0] < hops:
            h = max(hops, 2 * ent[0] if ent else hops)
            rng = self._stream(i, j)
            # hop-major draws: a longer stream extends a shorter one
            draws = rng.random((h, int(m.trials))) * m.jitter_fraction
            ent = (h, np.cumsum(draws, axis=0), {})
            self.cache[(i, j)] = ent
        med = ent[2].get(hops)
        if med is None:
            med = m.per_hop_base_ms * float(np.median(hops + ent[1][hops - 1]))
            ent[2][hops] = med
        return med


def _reachable_pairs(hops: np.ndarray):
    i, j = np.nonzero(np.triu(hops > 0, k=1))
    return i, j


def pair_delays(c_layer, model: DelayModel | None = None, layer: str | None = None) -> dict:
    """Median delay per reachable unordered pair, keyed by node pairs."""
    model = model or DelayModel()
    nodes, adj = _comm_graph(c_layer, layer)
    hops = hop_matrix(adj)
    d = _PairDelays(model, nodes)
    return {(nodes[a], nodes[b]): d.median(a, b, int(hops[a, b]))
            for a, b in zip(*(x.tolist() for x in _reachable_pairs(hops)))}


def simulate_delays(c_layer, model: DelayModel | None = None, layer: str | None = None) -> float:
    """Median over reachable pairs of the per-pair median delay (ms)."""
    vals = list(pair_delays(c_layer, model, layer).values())
    if not vals:
        raise NoReachablePairs("no pair of communication nodes is connected")
    return float(np.median(vals))


def delay_impact_sweep(c_layer, model: DelayModel | None = None,
                       layer: str | None = None) -> DelayReport:
    """Remove each node in turn and report the change of the median delay.

    For removed node ``v`` the reference is the baseline median over pairs
    not involving ``v``; the removed median covers those of them that stay
    reachable, and the rest are counted as newly unreachable.  Rows are
    ranked by median increase (a removal leaving no reachable pair counts as
    an infinite increase), then by newly unreachable pairs, then by name.
    """
    model = model or DelayModel()
    nodes, adj = _comm_graph(c_layer, layer)
    delays = _PairDelays(model, nodes)
    base_hops = hop_matrix(adj)
    pi, pj = _reachable_pairs(base_hops)
    if len(pi) == 0:
        raise NoReachablePairs("no pair of communication nodes is connected")
    base_h = base_hops[pi, pj]
    base_vals = np.array([delays.median(a, b, h) for a, b, h in
                          zip(pi.tolist(), pj.tolist(), base_h.tolist())])
    baseline = float(np.median(base_vals))
    rows = []
    for v in range(len(nodes)):
        keep = (pi != v) & (pj != v)
        ref = float(np.median(base_vals[keep])) if keep.any() else math.nan
        new_h = hop_matrix(adj, excluded=v)[pi, pj]
        alive = keep & (new_h > 0)
        lost = int(np.count_nonzero(keep & (new_h < 0)))
        vals = base_vals.copy()
        for k in np.nonzero(alive & (new_h != base_h))[0].tolist():
            vals[k] = delays.median(int(pi[k]), int(pj[k]), int(new_h[k]))
        if alive.any():
            med = float(np.median(vals[alive]))
            delta = med - ref
        else:
            med = delta = math.nan
        rows.append(RemovalDelay(nodes[v], ref, med, delta, lost))

    def key(r):
        d = math.inf if math.isnan(r.delta_ms) else r.delta_ms
        return (-d, -r.unreachable_pairs, name_key(r.node.name))

    rows.sort(key=key)
    return DelayReport(baseline, len(base_vals), rows, model)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def delay_csv(report: DelayReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "node", "baseline_ms", "removed_median_ms", "delta_ms", "unreachable_pairs"])
    for i, r in enumerate(report.rows, 1):
        w.writerow([i, r.node.name, _fmt(r.reference_ms), _fmt(r.median_ms), _fmt(r.delta_ms),
                    r.unreachable_pairs])
    return buf.getvalue()
