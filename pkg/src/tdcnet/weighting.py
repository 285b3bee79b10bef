"""Edge weights from line impedance.

Physical mode weights every transmission/distribution line by its impedance
magnitude divided by the mean magnitude of its population (its own layer by
default).  Communication links get weight 1 and inter-layer links weight 0.
Unit mode sets every intra-layer edge to 1.
"""

from __future__ import annotations

import math
from dataclasses import replace
from enum import Enum

from .errors import MissingImpedance, NonFiniteInput, ValidationError, ZeroMeanImpedance
from .netmodel import MultilayerNetwork

PHYSICAL_LAYERS = ("T", "D")


class WeightingMode(str, Enum):
    PHYSICAL = "physical"
    UNIT = "unit"


def impedance_magnitude(r: float, x: float) -> float:
    """|R + jX|."""
    r, x = float(r), float(x)
    if not (math.isfinite(r) and math.isfinite(x)):
        raise NonFiniteInput(f"impedance components must be finite, got r={r}, x={x}")
    return math.hypot(r, x)


def _mean(values) -> float:
    """Mean taken as an offset from the first value, so equal inputs give
    that value exactly (and hence weights of exactly 1)."""
    m0 = values[0]
    return m0 + math.fsum(v - m0 for v in values) / len(values)


def assign_weights(
    net: MultilayerNetwork,
    mode: WeightingMode | str = WeightingMode.PHYSICAL,
    normalize: str = "per-layer",
    physical_layers=PHYSICAL_LAYERS,
) -> MultilayerNetwork:
    """Return a copy of ``net`` with recomputed edge weights.

    ``normalize`` is ``"per-layer"`` or ``"global"`` (one mean over all
    physical-layer lines).  Layers named in ``physical_layers`` but absent
    from the network are ignored.
    """
    mode = WeightingMode(mode)
    if normalize not in ("per-layer", "global"):
        raise ValidationError(f"normalize must be 'per-layer' or 'global', not {normalize!r}")
    phys = [l for l in net.layers if l in set(physical_layers)]

    means: dict[str, float] = {}
    if mode is WeightingMode.PHYSICAL:
        mags: dict[str, list[float]] = {l: [] for l in phys}
        for e in net.edges:
            if e.kind == "intra" and e.a.layer in mags:
                if not e.has_impedance:
                    raise MissingImpedance(f"edge {e.a}-{e.b} has no impedance (physical mode)")
                mags[e.a.layer].append(impedance_magnitude(e.resistance, e.reactance))
        if normalize == "global":
            pooled = [m for l in phys for m in mags[l]]
            mean = _mean(pooled) if pooled else 0.0
            if pooled and mean == 0.0:
                raise ZeroMeanImpedance("all physical-layer impedances are zero")
            means = {l: mean for l in phys}
        else:
            for l in phys:
                if not mags[l]:
                    continue
                mean = _mean(mags[l])
                if mean == 0.0:
                    raise ZeroMeanImpedance(f"all impedances in layer {l} are zero")
                means[l] = mean

    edges = []
    for e in net.edges:
        if e.kind == "inter":
            w = 0.0
        elif mode is WeightingMode.PHYSICAL and e.a.layer in means:
            w = impedance_magnitude(e.resistance, e.reactance) / means[e.a.layer]
        else:
            w = 1.0
        edges.append(replace(e, weight=w))
    return net.with_edges(edges)
