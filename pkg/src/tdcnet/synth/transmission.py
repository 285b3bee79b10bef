"""Transmission (T layer) ingestion.

Substation file schema (JSON)::

    {
      "format": "tdcnet-transmission/1",
      "substations": [{"name": "1", "voltage_kv": 115.0, "label": "..."}, ...],
      "impedance_unit": "ohm",
      "branches": [{"from": "1", "to": "2", "r": 0.71, "x": 4.58}, ...]
    }

Branch rows between the same pair of substations are parallel circuits; they
are merged into one edge whose impedance is their parallel combination and
whose ``circuits`` field records the count.
"""

from __future__ import annotations

import json
import math
import re
from collections import OrderedDict
from pathlib import Path

from ..errors import MissingImpedance, MissingVoltage, ParseError
from ..netmodel import EdgeRecord, NodeAttrs, NodeRef, build_network, name_key

FORMAT_TAG = "tdcnet-transmission/1"


def _parallel(z1: complex, z2: complex) -> complex:
    if z1 == 0 or z2 == 0:
        return 0j
    return z1 * z2 / (z1 + z2)


def transmission_from_dict(doc: dict, source: str = "<document>"):
    """Build a T-layer network from a parsed substation document."""
    if not isinstance(doc, dict) or "substations" not in doc or "branches" not in doc:
        raise ParseError(f"{source}: expected an object with 'substations' and 'branches'")
    subs: dict[str, NodeAttrs] = OrderedDict()
    for i, s in enumerate(doc["substations"]):
        try:
            name = str(s["name"]).strip()
        except (KeyError, TypeError):
            raise ParseError(f"{source}: substations[{i}] has no name") from None
        if not re.fullmatch(r"\d+", name):
            raise ParseError(f"{source}: substations[{i}] name {name!r} is not a decimal integer")
        v = s.get("voltage_kv")
        if v is None:
            raise MissingVoltage(f"{source}: substation {name} has no voltage_kv")
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise ParseError(f"{source}: substation {name} voltage {v!r} is not a number") from None
        if not (v > 0 and math.isfinite(v)):
            raise MissingVoltage(f"{source}: substation {name} voltage must be positive")
        if name in subs:
            raise ParseError(f"{source}: substation {name} listed twice")
        subs[name] = NodeAttrs(voltage_kv=v, kind="substation")

    merged: dict[tuple[str, str], list] = {}
    for i, b in enumerate(doc["branches"]):
        try:
            a, c = str(b["from"]).strip(), str(b["to"]).strip()
        except (KeyError, TypeError):
            raise ParseError(f"{source}: branches[{i}] needs 'from' and 'to'") from None
        for end in (a, c):
            if end not in subs:
                raise ParseError(f"{source}: branches[{i}] references unknown substation {end!r}")
        if a == c:
            raise ParseError(f"{source}: branches[{i}] joins substation {a} to itself")
        r, x = b.get("r"), b.get("x")
        if r is None or x is None:
            raise MissingImpedance(f"{source}: branches[{i}] ({a}-{c}) lacks r or x")
        try:
            z = complex(float(r), float(x))
        except (TypeError, ValueError):
            raise ParseError(f"{source}: branches[{i}] impedance is not numeric") from None
        key = (a, c) if name_key(a) <= name_key(c) else (c, a)
        if key in merged:
            merged[key][0] = _parallel(merged[key][0], z)
            merged[key][1] += 1
        else:
            merged[key] = [z, 1]

    nodes = [(NodeRef("T", n), at) for n, at in subs.items()]
    edges = [EdgeRecord(NodeRef("T", a), NodeRef("T", c), resistance=z.real, reactance=z.imag,
                        circuits=k)
             for (a, c), (z, k) in merged.items()]
    return build_network(nodes, edges, layers=["T"])


def load_transmission(path):
    """Read a substation file (see module docstring) into a T-layer network."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"transmission file not found: {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return transmission_from_dict(doc, str(path))


# -- MATPOWER conversion -------------------------------------------------------------

_MATRIX_RE = re.compile(r"mpc\.(\w+)\s*=\s*([\[{])(.*?)[\]}]\s*;", re.S)
_BUS_SUFFIX_RE = re.compile(r"\s+\d+$")


def _matrix_blocks(text: str) -> dict:
    blocks = {}
    for m in _MATRIX_RE.finditer(text):
        body = "\n".join(line.split("%", 1)[0] for line in m.group(3).splitlines())
        rows = [r.strip() for r in body.split(";")]
        if m.group(2) == "[":
            blocks[m.group(1)] = [r.split() for r in rows if r]
        else:
            blocks[m.group(1)] = [r.strip("'\"") for r in (s.strip() for s in body.replace(";", "\n").splitlines()) if r]
    return blocks


def convert_matpower(path, attribution: str | None = None, units: str = "ohm") -> dict:
    """Collapse a MATPOWER case into a substation document.

    Buses are grouped into substations by ``bus_name`` with its trailing bus
    number removed (``"PEORIA 9 0"`` and ``"PEORIA 9 1"`` form ``"PEORIA 9"``);
    substations are numbered 1..N in order of first appearance.  A substation's
    nominal voltage is the highest ``baseKV`` among its buses.  In-service
    branches between different substations are kept; transformers inside a
    substation are dropped.  With ``units="ohm"`` per-unit impedances are
    converted with the from-bus base voltage (``Z_ohm = Z_pu * kV^2 / baseMVA``)
    so that T and D lines share one unit; ``units="pu"`` keeps them as stored.
    """
    if units not in ("ohm", "pu"):
        raise ParseError(f"units must be 'ohm' or 'pu', not {units!r}")
    path = Path(path)
    text = path.read_text(encoding="utf-8", errors="replace")
    blocks = _matrix_blocks(text)
    for needed in ("bus", "branch", "bus_name"):
        if needed not in blocks:
            raise ParseError(f"{path}: no mpc.{needed} block")
    bus, branch, names = blocks["bus"], blocks["branch"], blocks["bus_name"]
    m = re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)", text)
    base_mva = float(m.group(1)) if m else 100.0
    if len(names) != len(bus):
        raise ParseError(f"{path}: {len(names)} bus names for {len(bus)} buses")

    sub_of_bus: dict[int, str] = {}
    bus_kv: dict[int, float] = {}
    labels: dict[str, str] = OrderedDict()
    sub_of_group: dict[str, str] = {}
    volt: dict[str, float] = {}
    for row, label in zip(bus, names):
        try:
            bus_id, base_kv = int(float(row[0])), float(row[9])
        except (IndexError, ValueError):
            raise ParseError(f"{path}: malformed bus row {row[:3]}") from None
        group = _BUS_SUFFIX_RE.sub("", label.strip())
        if group not in sub_of_group:
            sub_of_group[group] = str(len(labels) + 1)
            labels[sub_of_group[group]] = group
        sub = sub_of_group[group]
        sub_of_bus[bus_id] = sub
        bus_kv[bus_id] = base_kv
        volt[sub] = max(volt.get(sub, 0.0), base_kv)

    branches = []
    for row in branch:
        try:
            f, t, r, x = int(float(row[0])), int(float(row[1])), float(row[2]), float(row[3])
            status = float(row[10]) if len(row) > 10 else 1.0
        except (IndexError, ValueError):
            raise ParseError(f"{path}: malformed branch row {row[:4]}") from None
        if status == 0:
            continue
        try:
            a, b = sub_of_bus[f], sub_of_bus[t]
        except KeyError as exc:
            raise ParseError(f"{path}: branch references unknown bus {exc}") from None
        if a != b:
            z_base = bus_kv[f] ** 2 / base_mva if units == "ohm" else 1.0
            branches.append({"from": a, "to": b, "r": round(r * z_base, 9),
                             "x": round(x * z_base, 9)})

    doc = {
        "format": FORMAT_TAG,
        "impedance_unit": units,
        "substations": [{"name": n, "voltage_kv": volt[n], "label": labels[n]} for n in labels],
        "branches": branches,
    }
    if attribution:
        doc["attribution"] = attribution
    return doc
