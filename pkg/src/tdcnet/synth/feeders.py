"""Radial feeder templates.

The bundled templates ``R5-12.47-1`` (142 nodes) and ``R5-12.47-2`` (67 nodes)
are *stand-ins*: generated radial trees of the right sizes, not the
prototypical feeder models themselves.  Users holding the real feeder data
can supply their own template files in the same JSON format::

    {
      "format": "tdcnet-feeder/1",
      "id": "R5-12.47-1",
      "root": 1,
      "nodes": [{"index": 1, "voltage_kv": 12.47}, ...],
      "edges": [{"a": 1, "b": 2, "r": 0.21, "x": 0.43}, ...]
    }

Impedances are in ohms.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError

FORMAT_TAG = "tdcnet-feeder/1"
STANDIN_SIZES = {"R5-12.47-1": 142, "R5-12.47-2": 67}
FEEDER_KV = 12.47

# per-km line constants of a typical overhead primary conductor
_OHM_PER_KM = (0.306, 0.627)


@dataclass(frozen=True)
class FeederTemplate:
    id: str
    nodes: tuple  # ((index, voltage_kv), ...)
    edges: tuple  # ((a, b, r, x), ...)
    root: int = 1
    standin: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def validate(self) -> "FeederTemplate":
        idx = [i for i, _ in self.nodes]
        if len(set(idx)) != len(idx):
            raise ValidationError(f"feeder {self.id}: duplicate node index")
        if any(not (1 <= i <= 999) for i in idx):
            raise ValidationError(f"feeder {self.id}: node indices must lie in 1..999")
        if self.root not in set(idx):
            raise ValidationError(f"feeder {self.id}: root {self.root} is not a node")
        if len(self.edges) != len(idx) - 1:
            raise ValidationError(f"feeder {self.id}: a tree on {len(idx)} nodes needs "
                                  f"{len(idx) - 1} edges, found {len(self.edges)}")
        adj = {i: [] for i in idx}
        for a, b, r, x in self.edges:
            if a not in adj or b not in adj or a == b:
                raise ValidationError(f"feeder {self.id}: bad edge {a}-{b}")
            adj[a].append(b)
            adj[b].append(a)
        seen, stack = {self.root}, [self.root]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(idx):
            raise ValidationError(f"feeder {self.id}: template is not connected")
        return self

    def to_dict(self) -> dict:
        doc = {
            "format": FORMAT_TAG,
            "id": self.id,
            "root": self.root,
            "nodes": [{"index": i, "voltage_kv": v} for i, v in self.nodes],
            "edges": [{"a": a, "b": b, "r": r, "x": x} for a, b, r, x in self.edges],
        }
        if self.standin:
            doc["standin"] = True
            doc["note"] = ("Generated stand-in of matching size; "
                           "not the prototypical feeder model.")
        return doc


def template_from_dict(doc: dict, source: str = "<document>") -> FeederTemplate:
    try:
        nodes = tuple((int(n["index"]), float(n.get("voltage_kv", FEEDER_KV))) for n in doc["nodes"])
        edges = tuple((int(e["a"]), int(e["b"]), float(e["r"]), float(e["x"])) for e in doc["edges"])
        t = FeederTemplate(str(doc["id"]), nodes, edges, int(doc.get("root", 1)),
                           bool(doc.get("standin", False)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{source}: malformed feeder template ({exc})") from None
    return t.validate()


def load_template(path) -> FeederTemplate:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"feeder template not found: {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return template_from_dict(doc, str(path))


def generate_standin(template_id: str, n_nodes: int | None = None, *,
                     branching: int = 7) -> FeederTemplate:
    """Deterministic balanced radial tree standing in for a named feeder.

    Nodes are numbered breadth-first from the root (index 1) and every node
    takes up to ``branching`` children before the next one does, so all
    internal non-root nodes have degree ``branching + 1``.  Section lengths
    are drawn from [0.05, 0.5] km by a generator seeded with the template id,
    so the output is a fixed function of the arguments.
    """
    n = STANDIN_SIZES[template_id] if n_nodes is None else int(n_nodes)
    if n < 2 or branching < 1:
        raise ValidationError("stand-in feeder needs at least two nodes and branching >= 1")
    rng = np.random.default_rng(zlib.crc32(template_id.encode()))
    lengths = rng.uniform(0.05, 0.5, size=n - 1)
    edges = tuple(((c - 1) // branching + 1, c + 1, round(float(km) * _OHM_PER_KM[0], 6),
                   round(float(km) * _OHM_PER_KM[1], 6))
                  for c, km in zip(range(1, n), lengths))
    nodes = tuple((i + 1, FEEDER_KV) for i in range(n))
    return FeederTemplate(template_id, nodes, edges, root=1, standin=True).validate()


def bundled_template_path(template_id: str):
    return resources.files("tdcnet") / "data" / "feeders" / f"{template_id}.json"


def bundled_templates() -> dict:
    """The shipped stand-in templates keyed by id."""
    out = {}
    for tid in STANDIN_SIZES:
        with resources.as_file(bundled_template_path(tid)) as p:
            out[tid] = load_template(p)
    return out


def write_template(t: FeederTemplate, path) -> None:
    Path(path).write_text(json.dumps(t.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
