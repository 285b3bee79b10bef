"""Time the compiled path kernels against the pure-Python fallback.

Runs each kernel on the synthesized testbed with both implementations,
checks that they agree, and prints one line per kernel::

    python benchmarks/bench_kernels.py --sources 20 --repeat 3
"""

import argparse
import statistics
import sys
import time

import numpy as np

from tdcnet._kernels import _fallback
from tdcnet.metrics import VoltageCoefficient, efficiency_plan
from tdcnet.synth import SynthConfig, synthesize

try:
    from tdcnet._kernels import _core
except ImportError:  # extension not built
    _core = None


def _time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def cases(net, n_sources, n_removed):
    """(name, callable(kernel module)) pairs sized by the options."""
    arrays = (net.indptr, net.indices, net.weights)
    t_idx = net.layer_indices("T")
    c_idx = net.layer_indices("C")
    sources = t_idx[:n_sources]
    mask = np.zeros(net.n_nodes, dtype=np.int8)
    mask[c_idx] = 1

    plan = efficiency_plan(net, "T", "C", VoltageCoefficient())
    base = _core.multi_sssp(*arrays, plan.sources) if _core else _fallback.multi_sssp(*arrays, plan.sources)
    inner = _fallback.inner_sums(base, plan.targets, plan.tcoef)
    removed = t_idx[:n_removed]

    return [
        ("multi_sssp", lambda k: k.multi_sssp(*arrays, sources)),
        ("inner_sums", lambda k: k.inner_sums(base, plan.targets, plan.tcoef)),
        ("path_counts", lambda k: k.path_counts(*arrays, int(sources[0]))[1]),
        ("brandes", lambda k: k.brandes(*arrays, sources, mask)),
        ("removal_sums", lambda k: k.removal_sums(*arrays, plan.sources, plan.scoef, plan.targets,
                                                  plan.tcoef, base, inner, removed)),
    ]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="testbed synthesis seed")
    p.add_argument("--sources", type=int, default=20, help="T sources for multi_sssp and brandes")
    p.add_argument("--removed", type=int, default=10, help="T nodes removed in removal_sums")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _core is None:
        print("compiled core not built; nothing to compare", file=sys.stderr)
        return 1

    net = synthesize(SynthConfig(rng_seed=args.seed))
    print(f"testbed: {net.n_nodes} nodes, {len(net.edges)} edges; "
          f"{args.sources} sources, {args.removed} removals, median of {args.repeat}")
    print(f"{'kernel':<14}{'compiled s':>12}{'python s':>12}{'speedup':>10}  agree")
    for name, fn in cases(net, args.sources, args.removed):
        tc, oc = _time(lambda: fn(_core), args.repeat)
        tp, op = _time(lambda: fn(_fallback), args.repeat)
        agree = np.allclose(oc, op, rtol=1e-12, atol=1e-12, equal_nan=True)
        print(f"{name:<14}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x  {'yes' if agree else 'NO'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
