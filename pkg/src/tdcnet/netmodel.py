"""Multilayer network data model.

A :class:`MultilayerNetwork` is an immutable snapshot of layers, layer-qualified
nodes and weighted undirected edges.  Nodes are stored in a canonical order
(layer position, then natural name order) and the adjacency is kept as CSR
arrays so the path kernels can consume it without conversion.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DanglingEdge,
    DuplicateNode,
    NameGrammarError,
    NegativeWeight,
    NonFiniteInput,
    ParallelEdge,
    ParseError,
    SelfLoop,
    UnknownLayer,
    UnknownNode,
    ValidationError,
)

NODE_KINDS = ("substation", "feeder_node", "der", "comm")
FORMAT_TAG = "tdcnet-network/1"

_SUBSTATION_RE = re.compile(r"^\d+$")
_DOTTED_RE = re.compile(r"^(\d+)\.(\d{1,3})$")


def normalize_name(name: str, kind: str = "comm") -> str:
    """Return the canonical spelling of a node name.

    Dotted feeder names get their fractional part right-padded to three
    digits, so ``"65.02"`` (a float-formatting artifact) becomes ``"65.020"``.
    Substations must be decimal integers; feeder nodes and DERs must be dotted.
    """
    name = str(name).strip()
    if not name:
        raise NameGrammarError("node name must be nonempty")
    m = _DOTTED_RE.match(name)
    if m:
        name = f"{m.group(1)}.{m.group(2).ljust(3, '0')}"
    if kind == "substation" and not _SUBSTATION_RE.match(name):
        raise NameGrammarError(f"substation name {name!r} is not a decimal integer")
    if kind in ("feeder_node", "der") and not m:
        raise NameGrammarError(f"feeder node name {name!r} is not of the form XYZ.ABC")
    return name


def name_key(name: str) -> tuple:
    """Natural sort key: numeric components compare as integers."""
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in name.split("."))


@dataclass(frozen=True)
class NodeRef:
    layer: str
    name: str

    def __str__(self) -> str:
        return f"{self.layer}:{self.name}"


@dataclass(frozen=True)
class NodeAttrs:
    voltage_kv: float | None = None
    kind: str = "comm"
    feeder_id: str | None = None
    has_feeder: bool = False
    is_der: bool = False


@dataclass(frozen=True)
class EdgeRecord:
    """Undirected edge.  ``circuits`` counts parallel physical lines merged
    into this record (their impedance is the parallel combination)."""

    a: NodeRef
    b: NodeRef
    resistance: float | None = None
    reactance: float | None = None
    weight: float = 1.0
    circuits: int = 1

    @property
    def kind(self) -> str:
        return "intra" if self.a.layer == self.b.layer else "inter"

    @property
    def has_impedance(self) -> bool:
        return self.resistance is not None and self.reactance is not None


@dataclass(frozen=True, eq=False)
class MultilayerNetwork:
    layers: tuple[str, ...]
    nodes: tuple[NodeRef, ...]
    attrs: Mapping[NodeRef, NodeAttrs]
    edges: tuple[EdgeRecord, ...]
    index: Mapping[NodeRef, int] = field(repr=False)
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    adj_edge: np.ndarray = field(repr=False)
    layer_index: np.ndarray = field(repr=False)

    # -- queries ---------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def excluded(self) -> int:
        return -1

    @property
    def base(self) -> "MultilayerNetwork":
        return self

    def has_node(self, ref: NodeRef) -> bool:
        return ref in self.index

    def check_layer(self, layer: str) -> int:
        try:
            return self.layers.index(layer)
        except ValueError:
            raise UnknownLayer(f"unknown layer {layer!r}; have {list(self.layers)}") from None

    def node_index(self, ref: NodeRef) -> int:
        try:
            return self.index[ref]
        except KeyError:
            raise UnknownNode(f"unknown node {ref}") from None

    def layer_nodes(self, layer: str) -> list[NodeRef]:
        li = self.check_layer(layer)
        return [self.nodes[i] for i in np.flatnonzero(self.layer_index == li)]

    def layer_indices(self, layer: str) -> np.ndarray:
        li = self.check_layer(layer)
        return np.flatnonzero(self.layer_index == li).astype(np.int64)

    def neighbors(self, ref: NodeRef) -> list[tuple[NodeRef, float]]:
        i = self.node_index(ref)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return [(self.nodes[j], float(w)) for j, w in zip(self.indices[lo:hi], self.weights[lo:hi])]

    def degree(self, ref: NodeRef, intra_only: bool = False) -> int:
        """Number of incident edge records (parallel circuits counted once)."""
        return sum(1 for nb, _ in self.neighbors(ref) if not intra_only or nb.layer == ref.layer)

    def layer_counts(self, layer: str) -> tuple[int, int]:
        """(N, L) for a layer; L counts physical circuits."""
        self.check_layer(layer)
        n = int(np.count_nonzero(self.layer_index == self.layers.index(layer)))
        m = sum(e.circuits for e in self.edges if e.a.layer == layer and e.b.layer == layer)
        return n, m

    def intra_edges(self, layer: str) -> list[EdgeRecord]:
        return [e for e in self.edges if e.a.layer == layer and e.b.layer == layer]

    def without(self, ref: NodeRef) -> "RemovalView":
        return removal_view(self, ref)

    def with_edges(self, edges: Iterable[EdgeRecord]) -> "MultilayerNetwork":
        """New network with the same nodes and a replacement edge set."""
        return build_network([(n, self.attrs[n]) for n in self.nodes], list(edges), layers=self.layers)

    def __eq__(self, other):
        if not isinstance(other, MultilayerNetwork):
            return NotImplemented
        return (
            self.layers == other.layers
            and self.nodes == other.nodes
            and dict(self.attrs) == dict(other.attrs)
            and self.edges == other.edges
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class RemovalView:
    """Read-only view of ``base`` with ``excluded_ref`` and its edges absent."""

    base: MultilayerNetwork
    excluded_ref: NodeRef

    @property
    def excluded(self) -> int:
        return self.base.index[self.excluded_ref]

    @property
    def layers(self) -> tuple[str, ...]:
        return self.base.layers

    @property
    def nodes(self) -> tuple[NodeRef, ...]:
        return tuple(n for n in self.base.nodes if n != self.excluded_ref)

    @property
    def n_nodes(self) -> int:
        return self.base.n_nodes - 1

    @property
    def edges(self) -> tuple[EdgeRecord, ...]:
        x = self.excluded_ref
        return tuple(e for e in self.base.edges if e.a != x and e.b != x)

    @property
    def attrs(self) -> Mapping[NodeRef, NodeAttrs]:
        return MappingProxyType({n: a for n, a in self.base.attrs.items() if n != self.excluded_ref})

    def has_node(self, ref: NodeRef) -> bool:
        return ref != self.excluded_ref and self.base.has_node(ref)

    def check_layer(self, layer: str) -> int:
        return self.base.check_layer(layer)

    def node_index(self, ref: NodeRef) -> int:
        if ref == self.excluded_ref:
            raise UnknownNode(f"node {ref} is removed in this view")
        return self.base.node_index(ref)

    def layer_nodes(self, layer: str) -> list[NodeRef]:
        return [n for n in self.base.layer_nodes(layer) if n != self.excluded_ref]

    def layer_indices(self, layer: str) -> np.ndarray:
        idx = self.base.layer_indices(layer)
        return idx[idx != self.excluded]

    def neighbors(self, ref: NodeRef) -> list[tuple[NodeRef, float]]:
        self.node_index(ref)
        return [(n, w) for n, w in self.base.neighbors(ref) if n != self.excluded_ref]

    def degree(self, ref: NodeRef, intra_only: bool = False) -> int:
        return sum(1 for nb, _ in self.neighbors(ref) if not intra_only or nb.layer == ref.layer)

    def layer_counts(self, layer: str) -> tuple[int, int]:
        self.check_layer(layer)
        n = len(self.layer_nodes(layer))
        m = sum(e.circuits for e in self.edges if e.a.layer == layer and e.b.layer == layer)
        return n, m

    def materialize(self) -> MultilayerNetwork:
        """Physically rebuilt network without the excluded node."""
        return build_network([(n, self.base.attrs[n]) for n in self.nodes], list(self.edges),
                             layers=self.base.layers)


def removal_view(net: MultilayerNetwork, v: NodeRef) -> RemovalView:
    net.node_index(v)
    return RemovalView(net, v)


# -- construction --------------------------------------------------------


def _check_real(value, what: str) -> float | None:
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteInput(f"{what} must be finite, got {value!r}")
    return value


def build_network(
    nodes: Sequence[tuple[NodeRef, NodeAttrs]],
    edges: Sequence[EdgeRecord],
    layers: Sequence[str] | None = None,
) -> MultilayerNetwork:
    """Validate nodes and edges and return an immutable network.

    ``layers`` fixes the layer order; by default it is the order of first
    appearance among ``nodes``.
    """
    if layers is None:
        layers = list(dict.fromkeys(ref.layer for ref, _ in nodes))
    layers = tuple(layers)
    if len(set(layers)) != len(layers) or any(not l for l in layers):
        raise ValidationError(f"layer ids must be unique and nonempty: {layers}")

    attrs: dict[NodeRef, NodeAttrs] = {}
    for ref, at in nodes:
        if ref.layer not in layers:
            raise UnknownLayer(f"node {ref} belongs to undeclared layer {ref.layer!r}")
        if at.kind not in NODE_KINDS:
            raise ValidationError(f"node {ref}: unknown kind {at.kind!r}")
        canon = NodeRef(ref.layer, normalize_name(ref.name, at.kind))
        if canon in attrs:
            raise DuplicateNode(f"duplicate node {canon}")
        v = _check_real(at.voltage_kv, f"voltage of {canon}")
        if v is not None and v < 0:
            raise ValidationError(f"node {canon}: voltage must be nonnegative")
        attrs[canon] = at

    lpos = {l: i for i, l in enumerate(layers)}
    order = sorted(attrs, key=lambda r: (lpos[r.layer], name_key(r.name)))
    index = {ref: i for i, ref in enumerate(order)}

    def canon_ref(ref: NodeRef) -> NodeRef:
        m = _DOTTED_RE.match(ref.name)
        name = f"{m.group(1)}.{m.group(2).ljust(3, '0')}" if m else ref.name
        return NodeRef(ref.layer, name)

    seen: dict[tuple[int, int], EdgeRecord] = {}
    for e in edges:
        a, b = canon_ref(e.a), canon_ref(e.b)
        for end in (a, b):
            if end not in index:
                raise DanglingEdge(f"edge {e.a}-{e.b} references absent node {end}")
        if a == b:
            raise SelfLoop(f"self-loop at {a}")
        w = _check_real(e.weight, f"weight of edge {a}-{b}")
        if w is None or w < 0:
            raise NegativeWeight(f"edge {a}-{b} has negative weight {w}")
        _check_real(e.resistance, "resistance")
        _check_real(e.reactance, "reactance")
        if e.circuits < 1:
            raise ValidationError(f"edge {a}-{b}: circuits must be >= 1")
        ia, ib = index[a], index[b]
        if ia > ib:
            a, b, ia, ib = b, a, ib, ia
        if (ia, ib) in seen:
            raise ParallelEdge(f"parallel edge {a}-{b}")
        seen[(ia, ib)] = replace(e, a=a, b=b, weight=w)

    keys = sorted(seen)
    edge_list = tuple(seen[k] for k in keys)
    n = len(order)
    deg = np.zeros(n + 1, dtype=np.int64)
    for ia, ib in keys:
        deg[ia + 1] += 1
        deg[ib + 1] += 1
    indptr = np.cumsum(deg)
    fill = indptr[:-1].copy()
    indices = np.empty(2 * len(keys), dtype=np.int64)
    weights = np.empty(2 * len(keys), dtype=np.float64)
    adj_edge = np.empty(2 * len(keys), dtype=np.int64)
    for eid, (ia, ib) in enumerate(keys):
        w = edge_list[eid].weight
        for s, t in ((ia, ib), (ib, ia)):
            k = fill[s]
            indices[k], weights[k], adj_edge[k] = t, w, eid
            fill[s] += 1
    # sort each adjacency row by neighbour index for deterministic traversal
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        o = np.argsort(indices[lo:hi], kind="stable")
        indices[lo:hi] = indices[lo:hi][o]
        weights[lo:hi] = weights[lo:hi][o]
        adj_edge[lo:hi] = adj_edge[lo:hi][o]
    layer_index = np.array([lpos[r.layer] for r in order], dtype=np.int64)
    for arr in (indptr, indices, weights, adj_edge, layer_index):
        arr.setflags(write=False)

    return MultilayerNetwork(
        layers=layers,
        nodes=tuple(order),
        attrs=MappingProxyType({r: attrs[r] for r in order}),
        edges=edge_list,
        index=MappingProxyType(index),
        indptr=indptr,
        indices=indices,
        weights=weights,
        adj_edge=adj_edge,
        layer_index=layer_index,
    )


def layer_subgraph(net: MultilayerNetwork, layer: str) -> MultilayerNetwork:
    """The layer's nodes and intra edges as a standalone single-layer network."""
    net.check_layer(layer)
    nodes = [(n, net.attrs[n]) for n in net.layer_nodes(layer)]
    return build_network(nodes, net.intra_edges(layer), layers=[layer])


def merge_layers(net: MultilayerNetwork, layers: Sequence[str]) -> MultilayerNetwork:
    """Sub-network induced by a set of layers (intra and inter edges among them)."""
    for l in layers:
        net.check_layer(l)
    keep = [l for l in net.layers if l in set(layers)]
    nodes = [(n, net.attrs[n]) for n in net.nodes if n.layer in keep]
    edges = [e for e in net.edges if e.a.layer in keep and e.b.layer in keep]
    return build_network(nodes, edges, layers=keep)


# -- serialization ---------------------------------------------------------


def to_dict(net: MultilayerNetwork) -> dict:
    nodes = []
    for ref in net.nodes:
        at = net.attrs[ref]
        nodes.append({
            "layer": ref.layer,
            "name": ref.name,
            "kind": at.kind,
            "voltage_kv": at.voltage_kv,
            "feeder_id": at.feeder_id,
            "has_feeder": at.has_feeder,
            "is_der": at.is_der,
        })
    edges = []
    for e in net.edges:
        edges.append({
            "a": {"layer": e.a.layer, "name": e.a.name},
            "b": {"layer": e.b.layer, "name": e.b.name},
            "r": e.resistance,
            "x": e.reactance,
            "weight": e.weight,
            "circuits": e.circuits,
        })
    return {"format": FORMAT_TAG, "layers": list(net.layers), "nodes": nodes, "edges": edges}


def dumps(net: MultilayerNetwork) -> str:
    """Canonical JSON text; byte-stable for equal networks."""
    return json.dumps(to_dict(net), indent=1, sort_keys=True, allow_nan=False) + "\n"


def from_dict(doc: dict) -> MultilayerNetwork:
    try:
        layers = doc["layers"]
        nodes = [(NodeRef(n["layer"], str(n["name"])),
                  NodeAttrs(voltage_kv=n.get("voltage_kv"), kind=n.get("kind", "comm"),
                            feeder_id=n.get("feeder_id"), has_feeder=bool(n.get("has_feeder", False)),
                            is_der=bool(n.get("is_der", False))))
                 for n in doc["nodes"]]
        edges = [EdgeRecord(NodeRef(e["a"]["layer"], str(e["a"]["name"])),
                            NodeRef(e["b"]["layer"], str(e["b"]["name"])),
                            resistance=e.get("r"), reactance=e.get("x"),
                            weight=e.get("weight", 1.0), circuits=int(e.get("circuits", 1)))
                 for e in doc["edges"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed network document: missing or bad field {exc}") from exc
    return build_network(nodes, edges, layers=layers)


def loads(text: str) -> MultilayerNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"network file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("network document must be a JSON object")
    return from_dict(doc)


def read_network(path) -> MultilayerNetwork:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def write_network(net: MultilayerNetwork, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(net))
