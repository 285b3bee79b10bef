"""Property tests over randomly generated networks."""

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracles
from tdcnet.errors import DegenerateSum
from tdcnet.delaysim import DelayModel, delay_csv, delay_impact_sweep, pair_delays
from tdcnet.metrics import (
    UNIT_K,
    VoltageCoefficient,
    cross_betweenness,
    cross_closeness_all,
    cross_efficiency,
    degree_pmf,
)
from tdcnet.netmodel import EdgeRecord, NodeAttrs, NodeRef, build_network, dumps, loads
from tdcnet.paths import count_shortest, shortest_from
from tdcnet.sweep import histogram, rank_top, removal_sweep
from tdcnet.weighting import assign_weights

INF = math.inf


class _Forest:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def join(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


@st.composite
def networks(draw, max_nodes=12, layers=("A", "B"), weights=(0.0, 0.5, 1.0, 2.0),
             zero_forest=False, voltages=(12.47, 115.0, 230.0), impedance=False, connected=False):
    """Random multilayer network; inter edges weigh 0.

    With ``zero_forest`` any edge that would close a cycle of zero-weight
    edges is dropped.  With ``impedance`` intra edges carry (r, x) > 0.
    With ``connected`` every layer has two or more nodes on a positive-weight
    path and the first two layers share an inter edge.
    """
    base = list(layers) * (2 if connected else 1)
    n = draw(st.integers(len(base), max_nodes))
    extra = draw(st.lists(st.sampled_from(layers), min_size=n - len(base), max_size=n - len(base)))
    count = {l: 0 for l in layers}
    nodes = []
    for l in base + extra:
        count[l] += 1
        v = draw(st.sampled_from(voltages)) if voltages else None
        nodes.append((NodeRef(l, str(count[l])), NodeAttrs(voltage_kv=v)))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=3 * n)) if pairs else []
    forced = set()
    if connected:
        for l in layers:
            members = [i for i, (r, _) in enumerate(nodes) if r.layer == l]
            forced.update(zip(members, members[1:]))
        forced.add((0, 1))
        chosen = sorted(forced | set(chosen))
    positive = [w for w in weights if w > 0]
    forest = _Forest()
    edges = []
    for i, j in sorted(chosen):
        a, b = nodes[i][0], nodes[j][0]
        if a.layer != b.layer:
            w, r, x = 0.0, None, None
        else:
            w = draw(st.sampled_from(positive if (i, j) in forced else weights))
            r = x = None
            if impedance:
                r = draw(st.floats(0.001, 2.0))
                x = draw(st.floats(0.001, 2.0))
        if zero_forest and w == 0.0 and not forest.join(a, b):
            continue
        edges.append(EdgeRecord(a, b, r, x, weight=w))
    return build_network(nodes, edges, layers=list(layers))


def _parts(net):
    return list(net.nodes), list(net.edges)


def _has_cross_pair(net, li="A", lj="B"):
    """Some finite positive cross distance, and closeness defined for every row."""
    fw = oracles.floyd_warshall(*_parts(net))
    vi, vj = net.layer_nodes(li), net.layer_nodes(lj)
    return (any(0 < fw[p][q] < INF for p in vi for q in vj)
            and not any(_all_zero(fw, p, vj) for p in vi))


def _all_zero(fw, p, vj):
    return all(fw[p][q] == 0 for q in vj)


# -- shortest paths -------------------------------------------------------------------


@given(networks())
def test_distances_match_relaxation_oracle(net):
    fw = oracles.floyd_warshall(*_parts(net))
    for s in net.nodes:
        got = shortest_from(net, s)
        for t in net.nodes:
            want = fw[s][t]
            if want == INF:
                assert got[t] == INF
            else:
                assert got[t] == pytest.approx(want, abs=1e-9)


@given(networks())
def test_distances_are_symmetric_and_tight(net):
    rows = {s: shortest_from(net, s) for s in net.nodes}
    for s in net.nodes:
        assert rows[s][s] == 0.0
        for t in net.nodes:
            assert rows[s][t] == rows[t][s]
        for e in net.edges:
            assert rows[s][e.b] <= rows[s][e.a] + e.weight + 1e-12
            assert rows[s][e.a] <= rows[s][e.b] + e.weight + 1e-12


@given(networks(max_nodes=9, weights=(0.0, 1.0, 2.0), zero_forest=True))
def test_path_counts_match_enumeration(net):
    adj = oracles.adjacency(*_parts(net))
    for s in net.nodes:
        dist, sigma = count_shortest(net, s)
        assert sigma[s] == 1
        for t in net.nodes:
            if t == s:
                continue
            want = len(oracles.shortest_paths(adj, s, t))
            assert sigma[t] == want
            assert (dist[t] < INF) == (want >= 1)


@given(networks(), st.data())
def test_removal_view_equals_rebuild(net, data):
    v = data.draw(st.sampled_from(net.nodes))
    view = net.without(v)
    rebuilt = view.materialize()
    for s in rebuilt.nodes:
        a, b = shortest_from(view, s), shortest_from(rebuilt, s)
        assert a.as_dict() == b.as_dict()
    for nb, _ in net.neighbors(v):
        assert view.degree(nb) == net.degree(nb) - sum(1 for w, _ in net.neighbors(nb) if w == v)
    assert v in net.nodes and net.n_nodes == view.n_nodes + 1


# -- data model -----------------------------------------------------------------------


@given(networks(impedance=True, layers=("T", "D", "C")))
def test_roundtrip_bytes(net):
    text = dumps(net)
    assert dumps(loads(text)) == text
    assert loads(text) == net


@given(networks(layers=("T", "C")))
def test_degree_pmf_sums_to_one(net):
    for layer in net.layers:
        pmf = degree_pmf(net, layer)
        assert math.fsum(pmf.bins.values()) == pytest.approx(1.0, abs=1e-12)
        n, m = net.layer_counts(layer)
        assert pmf.k_avg == 2 * m / n


# -- weighting ------------------------------------------------------------------------


@given(networks(impedance=True, layers=("T", "D", "C")))
def test_physical_weights_have_unit_mean(net):
    w = assign_weights(net)
    for layer in ("T", "D"):
        ws = [e.weight for e in w.intra_edges(layer)]
        if ws:
            assert math.fsum(ws) / len(ws) == pytest.approx(1.0, abs=1e-12)
    for e in w.edges:
        if e.kind == "inter":
            assert e.weight == 0.0
        else:
            assert e.weight >= 0.0
        if e.a.layer == "C" and e.kind == "intra":
            assert e.weight == 1.0


@given(networks(impedance=True, layers=("T", "C")), st.floats(0.01, 100.0))
def test_physical_weights_are_scale_invariant(net, c):
    scaled = net.with_edges([EdgeRecord(e.a, e.b, e.resistance * c, e.reactance * c, e.weight, e.circuits)
                             if e.a.layer == "T" and e.kind == "intra" else e for e in net.edges])
    a = [e.weight for e in assign_weights(net).edges]
    b = [e.weight for e in assign_weights(scaled).edges]
    assert b == pytest.approx(a, abs=1e-12)


@given(networks(impedance=True, layers=("T", "C")), st.floats(0.01, 10.0))
def test_equal_impedances_give_unit_weights(net, z):
    same = net.with_edges([EdgeRecord(e.a, e.b, 0.0, z, e.weight) if e.has_impedance else e
                           for e in net.edges])
    assert [e.weight for e in assign_weights(same).edges] == [e.weight for e in assign_weights(same, "unit").edges]


# -- cross metrics --------------------------------------------------------------------


@given(networks(zero_forest=True, connected=True))
def test_drops_lie_in_unit_interval_and_match_oracle(net):
    assume(_has_cross_pair(net))
    k = VoltageCoefficient()
    res = removal_sweep(net, "A", "B", k)
    kmap = {n: k.value(net, n) for n in net.nodes}
    assert [r.node for r in res.rows] == sorted(net.layer_nodes("A"), key=lambda r: int(r.name))
    for row in res.rows:
        assert 0.0 <= row.efficiency_drop <= 1.0
        want = oracles.efficiency_drop(*_parts(net), row.node, "A", "B", kmap)
        assert row.efficiency_drop == pytest.approx(want, abs=1e-9)


@given(networks(zero_forest=True))
def test_degenerate_closeness_is_reported(net):
    fw = oracles.floyd_warshall(*_parts(net))
    vj = net.layer_nodes("B")
    if any(_all_zero(fw, p, vj) for p in net.layer_nodes("A")):
        with pytest.raises(DegenerateSum):
            cross_closeness_all(net, "A", "B")
    else:
        assert all(c > 0 for c in cross_closeness_all(net, "A", "B").values())


@given(networks(zero_forest=True, connected=True))
def test_voltage_scaling_leaves_drops_and_rankings(net):
    assume(_has_cross_pair(net))
    k = VoltageCoefficient()
    base = removal_sweep(net, "A", "B", k)
    big = removal_sweep(net, "A", "B", k.scaled(7.0))
    assert cross_efficiency(net, "A", "B", k.scaled(7.0)) == pytest.approx(
        cross_efficiency(net, "A", "B", k), rel=1e-12, abs=1e-15)
    for a, b in zip(base.rows, big.rows):
        assert b.efficiency_drop == pytest.approx(a.efficiency_drop, abs=1e-12)
    n = len(base.rows)
    assert [r for r, _ in rank_top(base, "drop", n)] == [r for r, _ in rank_top(big, "drop", n)]


@given(networks(impedance=True, layers=("T", "C"), weights=(1.0,), zero_forest=True, connected=True),
       st.floats(0.1, 10.0))
def test_impedance_scaling_leaves_drop_rankings(net, c):
    net = assign_weights(net)
    assume(_has_cross_pair(net, "T", "C"))
    scaled = net.with_edges([EdgeRecord(e.a, e.b, e.resistance * c, e.reactance * c, e.weight)
                             if e.has_impedance else e for e in net.edges])
    a = removal_sweep(net, "T", "C", mode="physical")
    b = removal_sweep(scaled, "T", "C", mode="physical")
    for ra, rb in zip(a.rows, b.rows):
        assert rb.efficiency_drop == pytest.approx(ra.efficiency_drop, abs=1e-9)
    n = len(a.rows)
    assert [r for r, _ in rank_top(a, "drop", n)] == [r for r, _ in rank_top(b, "drop", n)]


@given(networks(voltages=(12.47, 115.0, 230.0)))
def test_unit_coefficients_reduce_to_plain_mean(net):
    fw = oracles.floyd_warshall(*_parts(net))
    vi, vj = net.layer_nodes("A"), net.layer_nodes("B")
    plain = math.fsum(1 / fw[p][q] for p in vi for q in vj if 0 < fw[p][q] < INF)
    assert cross_efficiency(net, "A", "B", UNIT_K) == pytest.approx(
        plain / (len(vi) * len(vj)), rel=1e-12, abs=1e-15)


@given(networks(zero_forest=True))
def test_betweenness_bounds(net):
    bc = cross_betweenness(net, "A", "B")
    n_i, n_j = len(net.layer_nodes("A")), len(net.layer_nodes("B"))
    for v, b in bc.items():
        assert 0.0 <= b <= (n_i - 1) * n_j + 1e-9


@given(networks(connected=True, zero_forest=True), st.randoms(use_true_random=False))
def test_closeness_ignores_node_order(net, rnd):
    assume(_has_cross_pair(net))
    names = {l: [n.name for n in net.layer_nodes(l)] for l in net.layers}
    for l in names:
        rnd.shuffle(names[l])
    relabel = {n: NodeRef(n.layer, names[n.layer][int(n.name) - 1]) for n in net.nodes}
    moved = build_network([(relabel[n], net.attrs[n]) for n in net.nodes],
                          [EdgeRecord(relabel[e.a], relabel[e.b], weight=e.weight) for e in net.edges],
                          layers=list(net.layers))
    a = cross_closeness_all(net, "A", "B")
    b = cross_closeness_all(moved, "A", "B")
    for n, c in a.items():
        assert b[relabel[n]] == pytest.approx(c, rel=1e-12)


# -- rankings and summaries -----------------------------------------------------------


@given(networks(zero_forest=True, connected=True), st.randoms(use_true_random=False))
def test_rank_top_ignores_row_order(net, rnd):
    assume(_has_cross_pair(net))
    res = removal_sweep(net, "A", "B")
    want = rank_top(res, "drop", 5)
    rnd.shuffle(res.rows)
    assert rank_top(res, "drop", 5) == want
    assert histogram(res).counts and sum(histogram(res).counts) == len(res.rows)
    assert sum(histogram(res, [0, 0.5, 2, 100]).counts) == len(res.rows)


# -- delays ---------------------------------------------------------------------------


@given(networks(layers=("C",), weights=(1.0,), voltages=None), st.floats(0.1, 5.0))
def test_zero_jitter_delays_are_hop_counts(net, base):
    unit = assign_weights(net, "unit")
    for (a, b), d in pair_delays(net, DelayModel(per_hop_base_ms=base, jitter_fraction=0.0)).items():
        assert d == base * shortest_from(unit, a)[b]


@given(networks(max_nodes=9, layers=("C",), weights=(1.0,), voltages=None), st.data(),
       st.integers(0, 2**32 - 1))
def test_removal_never_shortens_delays(net, data, seed):
    model = DelayModel(jitter_fraction=0.4, trials=7, rng_seed=seed)
    base = pair_delays(net, model)
    v = data.draw(st.sampled_from(net.nodes))
    after = pair_delays(net.without(v).materialize(), model)
    for pair, d in after.items():
        assert d >= base[pair]


@given(networks(max_nodes=8, layers=("C",), weights=(1.0,), voltages=None), st.integers(0, 2**32 - 1))
def test_delay_reports_repeat_exactly(net, seed):
    assume(len(net.edges) > 0)
    model = DelayModel(trials=5, rng_seed=seed)
    assert delay_csv(delay_impact_sweep(net, model)) == delay_csv(delay_impact_sweep(net, model))
