"""T&D&C testbed assembly: feeders, DERs and the communication layer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Mapping

import numpy as np

from ..errors import (
    DuplicateAssignment,
    RewireExhausted,
    TooFewNodes,
    UnknownSubstation,
    ValidationError,
)
from ..netmodel import EdgeRecord, NodeAttrs, NodeRef, build_network, name_key
from ..weighting import WeightingMode, assign_weights
from .feeders import FeederTemplate, bundled_templates
from .transmission import load_transmission

FEEDER_1 = "R5-12.47-1"
FEEDER_2 = "R5-12.47-2"

# substations with attached feeders, in order of decreasing load
DEFAULT_ASSIGNMENTS = (
    ("65", FEEDER_1), ("70", FEEDER_1), ("18", FEEDER_1), ("92", FEEDER_2),
    ("96", FEEDER_1), ("12", FEEDER_1), ("6", FEEDER_1), ("7", FEEDER_1),
    ("24", FEEDER_1), ("78", FEEDER_1), ("105", FEEDER_1), ("14", FEEDER_1),
    ("91", FEEDER_1), ("73", FEEDER_1), ("27", FEEDER_1), ("108", FEEDER_1),
    ("48", FEEDER_2), ("75", FEEDER_1), ("13", FEEDER_1), ("60", FEEDER_2),
)

# stream tags for SeedSequence([seed, tag])
_DER_STREAM = 1
_REWIRE_STREAM = 2
_MAX_REWIRE_TRIES = 2


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


@dataclass(frozen=True)
class SynthConfig:
    feeder_assignments: tuple = DEFAULT_ASSIGNMENTS
    ders_per_feeder: int = 3
    rewire_fraction: float = 0.10
    rng_seed: int = 0

    def __post_init__(self):
        if isinstance(self.feeder_assignments, Mapping):
            object.__setattr__(self, "feeder_assignments", tuple(self.feeder_assignments.items()))
        else:
            object.__setattr__(self, "feeder_assignments",
                               tuple((str(s), str(t)) for s, t in self.feeder_assignments))
        if not (0.0 <= float(self.rewire_fraction) <= 1.0):
            raise ValidationError(f"rewire_fraction must lie in [0, 1], got {self.rewire_fraction}")
        if int(self.ders_per_feeder) < 0:
            raise ValidationError("ders_per_feeder must be >= 0")

    def to_dict(self) -> dict:
        return {
            "feeder_assignments": [[s, t] for s, t in self.feeder_assignments],
            "ders_per_feeder": int(self.ders_per_feeder),
            "rewire_fraction": float(self.rewire_fraction),
            "rng_seed": int(self.rng_seed),
        }


def _node_list(net):
    return [(r, net.attrs[r]) for r in net.nodes]


def attach_feeders(net, templates: Mapping[str, FeederTemplate], config: SynthConfig):
    """Instantiate one feeder per assignment under the D layer.

    Feeder node ``i`` of substation ``s`` is named ``"s.iii"``; the feeder
    root is joined to its substation by a zero-weight inter edge.
    """
    seen = set()
    for sub, tid in config.feeder_assignments:
        if sub in seen:
            raise DuplicateAssignment(f"substation {sub} is assigned more than one feeder")
        seen.add(sub)
        if not net.has_node(NodeRef("T", sub)):
            raise UnknownSubstation(f"substation {sub} is not in the T layer")
        if tid not in templates:
            raise ValidationError(f"no feeder template with id {tid!r}")

    nodes = []
    for ref, at in _node_list(net):
        if ref.layer == "T" and ref.name in seen:
            at = replace(at, has_feeder=True, feeder_id=ref.name)
        nodes.append((ref, at))
    edges = list(net.edges)
    for sub, tid in config.feeder_assignments:
        t = templates[tid]
        name = {i: f"{sub}.{i:03d}" for i, _ in t.nodes}
        for i, kv in t.nodes:
            nodes.append((NodeRef("D", name[i]), NodeAttrs(voltage_kv=kv, kind="feeder_node",
                                                           feeder_id=sub)))
        for a, b, r, x in t.edges:
            edges.append(EdgeRecord(NodeRef("D", name[a]), NodeRef("D", name[b]), r, x))
        edges.append(EdgeRecord(NodeRef("T", sub), NodeRef("D", name[t.root]), weight=0.0))
    layers = [l for l in net.layers] + ([] if "D" in net.layers else ["D"])
    return build_network(nodes, edges, layers=layers)


def feeder_roots(net) -> dict:
    """Substation name -> D root node for every attached feeder."""
    out = {}
    for e in net.edges:
        ends = {e.a.layer: e.a, e.b.layer: e.b}
        if set(ends) == {"T", "D"}:
            out[ends["T"].name] = ends["D"]
    return out


def place_ders(net, config: SynthConfig):
    """Flag ``ders_per_feeder`` distinct non-root nodes of every feeder as DERs,
    drawn uniformly without replacement (feeders in substation-name order)."""
    k = int(config.ders_per_feeder)
    roots = feeder_roots(net)
    by_feeder: dict[str, list[NodeRef]] = {}
    for ref in net.layer_nodes("D") if "D" in net.layers else []:
        by_feeder.setdefault(net.attrs[ref].feeder_id, []).append(ref)
    chosen = set()
    if k > 0:
        rng = _rng(config.rng_seed, _DER_STREAM)
        for sub in sorted(by_feeder, key=name_key):
            eligible = [r for r in by_feeder[sub] if r != roots.get(sub)]
            if len(eligible) < k:
                raise TooFewNodes(f"feeder at {sub} has {len(eligible)} non-root nodes, "
                                  f"fewer than {k} DERs")
            pick = rng.choice(len(eligible), size=k, replace=False)
            chosen.update(eligible[int(i)] for i in sorted(pick))
    nodes = [(r, replace(at, is_der=r in chosen) if r.layer == "D" else at)
             for r, at in _node_list(net)]
    return build_network(nodes, net.edges, layers=net.layers)


def rewire_edges(pairs, names, n_rewire: int, rng: np.random.Generator):
    """Endpoint-preserving rewiring of ``n_rewire`` distinct edges.

    For each chosen edge one endpoint (uniform) is kept and the other moves to
    a uniform node that is neither the kept endpoint, nor currently adjacent
    to it, nor an original partner of it; if the first endpoint has no
    admissible partner the other endpoint is tried.
    """
    pairs = [tuple(sorted(p, key=name_key)) for p in pairs]
    original = set(pairs)
    current = set(pairs)
    adj = {n: set() for n in names}
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    pick = rng.choice(len(pairs), size=n_rewire, replace=False) if n_rewire else []
    names = sorted(names, key=name_key)
    for ei in sorted(int(i) for i in pick):
        a, b = pairs[ei]
        first = int(rng.integers(2))
        for attempt in range(_MAX_REWIRE_TRIES):
            keep, drop = (a, b) if (first + attempt) % 2 == 0 else (b, a)
            cands = [n for n in names if n != keep and n not in adj[keep]
                     and tuple(sorted((keep, n), key=name_key)) not in original]
            if cands:
                break
        else:
            raise RewireExhausted(f"no admissible endpoint to rewire edge {a}-{b}")
        new = cands[int(rng.integers(len(cands)))]
        current.discard((a, b))
        adj[a].discard(b)
        adj[b].discard(a)
        current.add(tuple(sorted((keep, new), key=name_key)))
        adj[keep].add(new)
        adj[new].add(keep)
    return sorted(current, key=lambda p: (name_key(p[0]), name_key(p[1])))


def rewire_count(n_edges: int, fraction: float) -> int:
    # round away float noise before the ceiling (0.1 * 150 is 15.000000000000002)
    return int(math.ceil(round(fraction * n_edges, 9)))


def build_comm_layer(net, config: SynthConfig):
    """Add the C layer: substation mirrors wired like T after rewiring, DER
    mirrors linked to their substation mirror, zero-weight mirror links."""
    t_nodes = net.layer_nodes("T")
    nodes = _node_list(net)
    for ref in t_nodes:
        at = net.attrs[ref]
        nodes.append((NodeRef("C", ref.name), NodeAttrs(kind="comm", has_feeder=at.has_feeder,
                                                        feeder_id=at.feeder_id)))
    ders = [r for r in net.layer_nodes("D") if net.attrs[r].is_der] if "D" in net.layers else []
    for ref in ders:
        nodes.append((NodeRef("C", ref.name), NodeAttrs(kind="der", is_der=True,
                                                        feeder_id=net.attrs[ref].feeder_id)))

    t_edges = net.intra_edges("T")
    _, l_t = net.layer_counts("T")
    n_rewire = rewire_count(l_t, float(config.rewire_fraction))
    n_rewire = min(n_rewire, len(t_edges))
    pairs = rewire_edges([(e.a.name, e.b.name) for e in t_edges], [r.name for r in t_nodes],
                         n_rewire, _rng(config.rng_seed, _REWIRE_STREAM))
    edges = list(net.edges)
    edges += [EdgeRecord(NodeRef("C", a), NodeRef("C", b)) for a, b in pairs]
    for ref in ders:
        sub = net.attrs[ref].feeder_id
        edges.append(EdgeRecord(NodeRef("C", ref.name), NodeRef("C", sub)))
        edges.append(EdgeRecord(ref, NodeRef("C", ref.name), weight=0.0))
    for ref in t_nodes:
        edges.append(EdgeRecord(ref, NodeRef("C", ref.name), weight=0.0))
    layers = list(net.layers) + ([] if "C" in net.layers else ["C"])
    return build_network(nodes, edges, layers=layers)


def default_transmission_path():
    return resources.files("tdcnet") / "data" / "activsg200_substations.json"


def load_default_transmission():
    with resources.as_file(default_transmission_path()) as p:
        return load_transmission(p)


def synthesize(config: SynthConfig | None = None, transmission=None, templates=None,
               mode: WeightingMode | str = WeightingMode.PHYSICAL, normalize: str = "per-layer"):
    """Full T&D&C testbed with weights assigned.

    ``transmission`` is a T-layer network (default: the bundled substation
    file); ``templates`` maps template ids to :class:`FeederTemplate`
    (default: the bundled stand-ins).
    """
    config = config or SynthConfig()
    t = transmission if transmission is not None else load_default_transmission()
    templates = templates if templates is not None else bundled_templates()
    net = attach_feeders(t, templates, config)
    net = place_ders(net, config)
    net = build_comm_layer(net, config)
    return assign_weights(net, mode, normalize)
