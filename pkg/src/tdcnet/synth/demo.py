"""Small constructed networks used by examples and tests."""

from __future__ import annotations

from importlib import resources

from ..netmodel import EdgeRecord, NodeAttrs, NodeRef, build_network, read_network

HV_KV = 230.0
LV_KV = 115.0

# (r, x) per line class
_Z_LV = (0.10, 0.99)
_Z_HV = (0.005, 0.05)
_Z_TAP = (0.03, 0.30)


def two_voltage_network(grid: int = 6, chain: int = 12, taps=((0, 1), (5, 6), (11, 36)),
                        tails=(15, 22, 29), tail_len: int = 3):
    """Single-layer T network with two voltage classes.

    A ``grid`` x ``grid`` mesh of 115 kV substations (names 1..grid^2) joined
    by high-impedance lines forms the topological centre.  A chain of
    ``chain`` 230 kV substations with low-impedance lines runs beside it,
    tied to mesh nodes at ``taps`` (pairs of chain position, mesh name).
    Radial 115 kV tails of ``tail_len`` nodes hang off the mesh nodes listed
    in ``tails``.  Hop counts make the chain a detour and the tail roots cut
    vertices; impedance makes the chain the fast route.
    """
    def sub(i):
        return NodeRef("T", str(i))

    n_grid = grid * grid
    lv = NodeAttrs(voltage_kv=LV_KV, kind="substation")
    hv = NodeAttrs(voltage_kv=HV_KV, kind="substation")
    nodes = [(sub(i + 1), lv) for i in range(n_grid)]
    nodes += [(sub(n_grid + j + 1), hv) for j in range(chain)]
    edges = []
    for r in range(grid):
        for c in range(grid):
            i = r * grid + c + 1
            if c + 1 < grid:
                edges.append(EdgeRecord(sub(i), sub(i + 1), *_Z_LV))
            if r + 1 < grid:
                edges.append(EdgeRecord(sub(i), sub(i + grid), *_Z_LV))
    for j in range(chain - 1):
        edges.append(EdgeRecord(sub(n_grid + j + 1), sub(n_grid + j + 2), *_Z_HV))
    for j, g in taps:
        edges.append(EdgeRecord(sub(n_grid + j + 1), sub(g), *_Z_TAP))
    nxt = n_grid + chain + 1
    for t in tails:
        prev = t
        for _ in range(tail_len):
            nodes.append((sub(nxt), lv))
            edges.append(EdgeRecord(sub(prev), sub(nxt), *_Z_LV))
            prev, nxt = nxt, nxt + 1
    return build_network(nodes, edges, layers=["T"])


def bundled_two_voltage_path():
    return resources.files("tdcnet") / "data" / "two_voltage_demo.json"


def load_two_voltage_network():
    with resources.as_file(bundled_two_voltage_path()) as p:
        return read_network(p)
