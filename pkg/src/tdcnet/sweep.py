"""Exhaustive single-node removal analysis and its reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import BadBinEdges, ValidationError
from .metrics import (
    VoltageCoefficient,
    closeness_from_rows,
    cross_betweenness,
    drop_ratio,
    efficiency_plan,
)
from .netmodel import NodeAttrs, NodeRef, name_key
from .paths import DEFAULT_TOL, distance_rows
from .weighting import WeightingMode, assign_weights

DEFAULT_BIN_EDGES = tuple(float(x) for x in range(0, 11)) + (100.0,)
METRICS = ("closeness", "betweenness", "drop")
RANK_TOL = 1e-12


@dataclass(frozen=True)
class CrossMetricRow:
    node: NodeRef
    closeness: float
    betweenness: float
    efficiency_drop: float


@dataclass
class SweepResult:
    direction: tuple[str, str]
    weighting: str
    rows: list[CrossMetricRow]
    seed: int | None
    runtime_ms: int
    base_efficiency: float
    attrs: dict = field(default_factory=dict, repr=False)

    def row(self, ref: NodeRef) -> CrossMetricRow:
        for r in self.rows:
            if r.node == ref:
                return r
        raise KeyError(ref)

    def drops(self) -> dict:
        return {r.node: r.efficiency_drop for r in self.rows}


@dataclass(frozen=True)
class HistogramSpec:
    bin_edges: tuple
    counts: tuple


@dataclass(frozen=True)
class GroupStats:
    label: str
    n: int
    median: float
    q1: float
    q3: float
    min: float
    max: float

    @property
    def empty(self) -> bool:
        return self.n == 0


# -- the sweep ----------------------------------------------------------------------


_WORKER: dict = {}


def _init_worker(args):
    _WORKER["args"] = args


def _work_chunk(chunk):
    return _kernels.removal_sums(*_WORKER["args"], chunk)


def _removal_sums(args, removed: np.ndarray, jobs: int) -> np.ndarray:
    if jobs <= 1 or len(removed) < 2 * jobs:
        return _kernels.removal_sums(*args, removed)
    chunks = [c for c in np.array_split(removed, jobs * 4) if len(c)]
    import multiprocessing as mp

    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx, initializer=_init_worker,
                             initargs=(args,)) as pool:
        parts = list(pool.map(_work_chunk, chunks))
    return np.concatenate(parts)


def default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


def removal_sweep(
    net,
    layer_i: str,
    layer_j: str,
    k: VoltageCoefficient | None = None,
    mode: WeightingMode | str | None = None,
    *,
    normalize: str = "per-layer",
    seed: int | None = None,
    jobs: int = 1,
    tol: float = DEFAULT_TOL,
    allow_same: bool = False,
) -> SweepResult:
    """Closeness, betweenness (intact network) and efficiency drop (one
    removal at a time) for every node of ``layer_i`` towards ``layer_j``.

    ``mode`` re-assigns weights before the sweep; ``None`` keeps the stored
    weights.  Rows come back in natural node-name order.
    """
    t0 = time.perf_counter()
    k = k or VoltageCoefficient()
    if mode is not None:
        net = assign_weights(net, mode, normalize)
    plan = efficiency_plan(net, layer_i, layer_j, k, allow_same)
    idx_i = net.layer_indices(layer_i)
    idx_j = net.layer_indices(layer_j)

    base_rows = distance_rows(net, plan.sources)
    inner = _kernels.inner_sums(base_rows, plan.targets, plan.tcoef)
    base_sum = 0.0
    for c, a in zip(plan.scoef.tolist(), inner.tolist()):
        base_sum += c * a
    if base_sum <= 0:
        drop_ratio(base_sum, 0.0)  # raises ZeroBaseEfficiency
    args = (net.indptr, net.indices, net.weights, plan.sources, plan.scoef,
            plan.targets, plan.tcoef, base_rows, inner)
    removed_sums = _removal_sums(args, idx_i, jobs)

    if plan.sources is idx_i:
        rows_ij = base_rows[:, idx_j]
    else:
        rows_ij = distance_rows(net, idx_i)[:, idx_j]
    closeness = closeness_from_rows(rows_ij, len(idx_i), len(idx_j))
    bc = cross_betweenness(net, layer_i, layer_j, tol, allow_same)

    nodes = net.nodes
    rows = [CrossMetricRow(nodes[i], float(c), bc[nodes[i]], drop_ratio(base_sum, float(s)))
            for i, c, s in zip(idx_i.tolist(), closeness.tolist(), removed_sums.tolist())]
    rows.sort(key=lambda r: name_key(r.node.name))
    runtime = int(round((time.perf_counter() - t0) * 1000))
    return SweepResult(
        direction=(layer_i, layer_j),
        weighting=WeightingMode(mode).value if mode is not None else "stored",
        rows=rows,
        seed=seed,
        runtime_ms=runtime,
        base_efficiency=base_sum / plan.denominator,
        attrs={r.node: net.attrs[r.node] for r in rows},
    )


# -- rankings and summaries ----------------------------------------------------------


def _metric_value(row: CrossMetricRow, metric: str) -> float:
    if metric == "closeness":
        return row.closeness
    if metric == "betweenness":
        return row.betweenness
    if metric == "drop":
        return row.efficiency_drop
    raise ValidationError(f"metric must be one of {METRICS}, not {metric!r}")


def rank_top(result: SweepResult, metric: str = "drop", k: int = 10,
             tol: float = RANK_TOL) -> list[tuple[NodeRef, float]]:
    """Top ``k`` nodes by ``metric``, descending; ties by ascending name.

    Values within ``tol * max(1, |v|)`` of the largest value of their group
    count as tied, so rounding noise cannot reorder equal scores.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    vals = [(r.node, _metric_value(r, metric)) for r in result.rows]
    vals.sort(key=lambda nv: (-nv[1], name_key(nv[0].name)))
    out, group, lead = [], [], 0.0
    for nv in vals:
        if group and lead - nv[1] > tol * max(1.0, abs(lead)):
            out += sorted(group, key=lambda g: name_key(g[0].name))
            group = []
        if not group:
            lead = nv[1]
        group.append(nv)
    out += sorted(group, key=lambda g: name_key(g[0].name))
    return out[:k]


def histogram(result: SweepResult, bin_edges: Sequence[float] | None = None) -> HistogramSpec:
    """Counts of drops (in percent) per half-open bin; the last bin is closed."""
    edges = tuple(float(e) for e in (bin_edges if bin_edges is not None else DEFAULT_BIN_EDGES))
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadBinEdges(f"bin edges must be strictly increasing: {edges}")
    if edges[0] > 0 or edges[-1] < 100:
        raise BadBinEdges(f"bin edges must cover [0, 100]: {edges}")
    counts = [0] * (len(edges) - 1)
    for r in result.rows:
        pct = 100.0 * r.efficiency_drop
        b = int(np.searchsorted(edges, pct, side="right")) - 1
        counts[min(max(b, 0), len(counts) - 1)] += 1
    return HistogramSpec(edges, tuple(counts))


def _feeder_label(ref: NodeRef, at: NodeAttrs) -> str:
    return "with_feeder" if at.has_feeder else "without_feeder"


def _der_label(ref: NodeRef, at: NodeAttrs) -> str:
    return "der" if at.is_der else "non_der"


GROUPINGS: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "feeder": (_feeder_label, ("with_feeder", "without_feeder")),
    "der": (_der_label, ("der", "non_der")),
    "all": (lambda ref, at: "all", ("all",)),
}


def group_stats(result: SweepResult, grouping="feeder") -> list[GroupStats]:
    """Median, quartiles and range of drops (percent) per group.

    ``grouping`` is a preset name from :data:`GROUPINGS` or a callable
    ``(NodeRef, NodeAttrs) -> label``.  Empty preset groups are reported with
    ``n == 0`` and NaN statistics rather than raising.
    """
    if isinstance(grouping, str):
        try:
            fn, labels = GROUPINGS[grouping]
        except KeyError:
            raise ValidationError(f"unknown grouping {grouping!r}") from None
    else:
        fn, labels = grouping, ()
    buckets: dict[str, list[float]] = {l: [] for l in labels}
    for r in result.rows:
        buckets.setdefault(fn(r.node, result.attrs.get(r.node, NodeAttrs())), []).append(
            100.0 * r.efficiency_drop)
    out = []
    for label, vals in buckets.items():
        if not vals:
            nan = math.nan
            out.append(GroupStats(label, 0, nan, nan, nan, nan, nan))
            continue
        a = np.asarray(vals)
        q1, med, q3 = np.percentile(a, [25, 50, 75])
        out.append(GroupStats(label, len(vals), float(med), float(q1), float(q3),
                              float(a.min()), float(a.max())))
    return out


@dataclass
class WeightingComparison:
    direction: tuple[str, str]
    unit: list[tuple[NodeRef, float, float | None]]
    physical: list[tuple[NodeRef, float, float | None]]
    overlap: int
    unit_result: SweepResult = field(repr=False)
    physical_result: SweepResult = field(repr=False)


def _annotated(result: SweepResult, top: int):
    return [(ref, v, result.attrs[ref].voltage_kv) for ref, v in rank_top(result, "drop", top)]


def compare_weightings(net, layer_i: str, layer_j: str, k: VoltageCoefficient | None = None,
                       *, top: int = 10, normalize: str = "per-layer", jobs: int = 1,
                       seed: int | None = None) -> WeightingComparison:
    """Sweep once with unit weights and once with physical weights and
    compare the top-``top`` drop rankings.  ``layer_i == layer_j`` compares
    single-layer efficiency on that layer alone."""
    if layer_i == layer_j:
        from .netmodel import layer_subgraph

        net = layer_subgraph(net, layer_i)
    opts = dict(normalize=normalize, jobs=jobs, seed=seed, allow_same=layer_i == layer_j)
    unit = removal_sweep(net, layer_i, layer_j, k, WeightingMode.UNIT, **opts)
    phys = removal_sweep(net, layer_i, layer_j, k, WeightingMode.PHYSICAL, **opts)
    u, p = _annotated(unit, top), _annotated(phys, top)
    overlap = len({r for r, *_ in u} & {r for r, *_ in p})
    return WeightingComparison((layer_i, layer_j), u, p, overlap, unit, phys)


# -- writers ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else repr(x))
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def sweep_csv(result: SweepResult) -> str:
    header = ["name", "layer", "closeness", "betweenness", "drop", "drop_pct",
              "voltage_kv", "has_feeder", "is_der"]
    rows = []
    for r in result.rows:
        at = result.attrs.get(r.node, NodeAttrs())
        rows.append([r.node.name, r.node.layer, r.closeness, r.betweenness, r.efficiency_drop,
                     100.0 * r.efficiency_drop, at.voltage_kv, at.has_feeder, at.is_der])
    return csv_text(header, rows)


def histogram_csv(h: HistogramSpec) -> str:
    rows = [[lo, hi, c] for lo, hi, c in zip(h.bin_edges, h.bin_edges[1:], h.counts)]
    return csv_text(["lo_pct", "hi_pct", "count"], rows)


def groups_csv(stats: Sequence[GroupStats]) -> str:
    return csv_text(["group", "n", "median_pct", "q1_pct", "q3_pct", "min_pct", "max_pct"],
                     [[g.label, g.n, g.median, g.q1, g.q3, g.min, g.max] for g in stats])


def top_table_csv(result: SweepResult, k: int = 10) -> str:
    """Side-by-side ranking in the layout of a critical-node table:
    rank, then (node, value) for closeness, betweenness and drop."""
    cols = [rank_top(result, m, k) for m in METRICS]
    rows = []
    for i in range(max(len(c) for c in cols)):
        row = [i + 1]
        for m, c in zip(METRICS, cols):
            if i < len(c):
                ref, v = c[i]
                row += [ref.name, 100.0 * v if m == "drop" else v]
            else:
                row += ["", ""]
        rows.append(row)
    return csv_text(["rank", "closeness_node", "closeness", "betweenness_node", "betweenness",
                      "drop_node", "drop_pct"], rows)


def comparison_csv(cmp: WeightingComparison) -> str:
    rows = []
    for i in range(max(len(cmp.unit), len(cmp.physical))):
        row = [i + 1]
        for side in (cmp.unit, cmp.physical):
            if i < len(side):
                ref, v, kv = side[i]
                row += [ref.name, 100.0 * v, kv]
            else:
                row += ["", "", ""]
        rows.append(row)
    return csv_text(["rank", "unit_node", "unit_drop_pct", "unit_voltage_kv",
                      "physical_node", "physical_drop_pct", "physical_voltage_kv"], rows)


def report_dict(result: SweepResult, bin_edges=None, k: int = 10) -> dict:
    h = histogram(result, bin_edges)
    return {
        "direction": {"from": result.direction[0], "to": result.direction[1]},
        "weighting": result.weighting,
        "seed": result.seed,
        "base_efficiency": result.base_efficiency,
        "n_rows": len(result.rows),
        "bins": {"edges_pct": list(h.bin_edges), "counts": list(h.counts)},
        "top": {m: [[ref.name, v] for ref, v in rank_top(result, m, k)] for m in METRICS},
        "groups": {g.label: {"n": g.n, "median_pct": _json_num(g.median)}
                   for g in group_stats(result, "der" if result.direction[0] == "D" else "feeder")},
    }


def _json_num(x: float):
    return None if (isinstance(x, float) and math.isnan(x)) else x


def report_json(result: SweepResult, bin_edges=None, k: int = 10) -> str:
    return json.dumps(report_dict(result, bin_edges, k), indent=1, sort_keys=True) + "\n"
