import math
from decimal import Decimal, getcontext

import pytest

from tdcnet.errors import MissingImpedance, NonFiniteInput, ValidationError, ZeroMeanImpedance
from tdcnet.netmodel import EdgeRecord, NodeAttrs, NodeRef, build_network
from tdcnet.weighting import assign_weights, impedance_magnitude


def T(n):
    return NodeRef("T", str(n))


def C(n):
    return NodeRef("C", str(n))


def t_chain(zs, extra_c=False):
    n = len(zs) + 1
    nodes = [(T(i), NodeAttrs(voltage_kv=115.0, kind="substation")) for i in range(1, n + 1)]
    edges = [EdgeRecord(T(i + 1), T(i + 2), r, x) for i, (r, x) in enumerate(zs)]
    layers = ["T"]
    if extra_c:
        nodes += [(C(1), NodeAttrs()), (C(2), NodeAttrs())]
        edges += [EdgeRecord(C(1), C(2), weight=7.0), EdgeRecord(T(1), C(1), weight=3.0)]
        layers.append("C")
    return build_network(nodes, edges, layers=layers)


def test_magnitude_examples():
    assert impedance_magnitude(3, 4) == 5
    assert impedance_magnitude(0, 0) == 0
    getcontext().prec = 50
    exact = (Decimal("0.01") ** 2 + Decimal("0.08") ** 2).sqrt()
    assert abs(impedance_magnitude(0.01, 0.08) - float(exact)) < 1e-17
    assert impedance_magnitude(0.01, 0.08) == pytest.approx(0.080622577, abs=1e-9)


def test_magnitude_rejects_nonfinite():
    with pytest.raises(NonFiniteInput):
        impedance_magnitude(math.inf, 0)


def test_uniform_impedance_gives_unit_weights():
    net = assign_weights(t_chain([(0, 1), (0, 1), (0, 1)]))
    assert [e.weight for e in net.edges] == [1.0, 1.0, 1.0]


def test_equal_impedances_give_exactly_one():
    # the naive mean sum(m)/3 of |0.93 + 1j| rounds below m
    net = assign_weights(t_chain([(0.93, 1.0)] * 3))
    assert [e.weight for e in net.edges] == [1.0, 1.0, 1.0]


def test_two_and_four_normalise_to_thirds():
    net = assign_weights(t_chain([(2, 0), (0, 4)]))
    w = sorted(e.weight for e in net.edges)
    assert w == pytest.approx([2 / 3, 4 / 3], abs=1e-15)
    assert sum(w) / 2 == pytest.approx(1.0, abs=1e-12)


def test_comm_and_inter_weights():
    net = assign_weights(t_chain([(2, 0), (0, 4)], extra_c=True))
    for e in net.edges:
        if e.kind == "inter":
            assert e.weight == 0.0
        elif e.a.layer == "C":
            assert e.weight == 1.0


def test_unit_mode():
    net = assign_weights(t_chain([(2, 0), (0, 4)], extra_c=True), "unit")
    assert all(e.weight == (0.0 if e.kind == "inter" else 1.0) for e in net.edges)


def test_per_layer_versus_global():
    d = NodeAttrs(voltage_kv=12.47, kind="feeder_node")
    nodes = [(T(1), NodeAttrs(voltage_kv=115.0, kind="substation")),
             (T(2), NodeAttrs(voltage_kv=115.0, kind="substation")),
             (NodeRef("D", "1.001"), d), (NodeRef("D", "1.002"), d)]
    edges = [EdgeRecord(T(1), T(2), 3.0, 0.0), EdgeRecord(NodeRef("D", "1.001"), NodeRef("D", "1.002"), 1.0, 0.0)]
    net = build_network(nodes, edges, layers=["T", "D"])
    per = {e.a.layer: e.weight for e in assign_weights(net).edges}
    glob = {e.a.layer: e.weight for e in assign_weights(net, normalize="global").edges}
    assert per == {"T": 1.0, "D": 1.0}
    assert glob == {"T": 1.5, "D": 0.5}
    with pytest.raises(ValidationError):
        assign_weights(net, normalize="layer")


def test_zero_impedance_jumper_gets_zero_weight():
    net = assign_weights(t_chain([(1, 0), (0, 0)]))
    assert sorted(e.weight for e in net.edges) == [0.0, 2.0]


def test_missing_and_zero_impedance():
    nodes = [(T(1), NodeAttrs(voltage_kv=1.0)), (T(2), NodeAttrs(voltage_kv=1.0))]
    with pytest.raises(MissingImpedance):
        assign_weights(build_network(nodes, [EdgeRecord(T(1), T(2))]))
    assign_weights(build_network(nodes, [EdgeRecord(T(1), T(2))]), "unit")
    with pytest.raises(ZeroMeanImpedance):
        assign_weights(t_chain([(0, 0), (0, 0)]))
