"""Command-line interface.

Every command writes its artifacts plus a ``manifest.json`` recording the
command, resolved options, seeds, input digests, tool version and a
timestamp (``SOURCE_DATE_EPOCH`` when set, for reproducible builds).

Exit codes: 0 success, 1 invalid input, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .delaysim import DelayModel, delay_csv, delay_impact_sweep
from .errors import EmptyLayer, InvalidDirection, TooFewNodes, ValidationError
from .metrics import UNIT_K, VoltageCoefficient, degree_pmf, network_efficiency
from .netmodel import layer_subgraph, read_network, write_network
from .sweep import (
    compare_weightings,
    comparison_csv,
    csv_text,
    default_jobs,
    group_stats,
    groups_csv,
    histogram,
    histogram_csv,
    rank_top,
    removal_sweep,
    report_json,
    sweep_csv,
    top_table_csv,
)
from .synth import (
    SynthConfig,
    bundled_templates,
    convert_matpower,
    load_template,
    load_transmission,
    synthesize,
)
from .synth.testbed import default_transmission_path
from .weighting import assign_weights

log = logging.getLogger("tdcnet")

DIRECTIONS = (("T", "D"), ("T", "C"), ("D", "T"), ("D", "C"), ("C", "T"), ("C", "D"))

# options that never affect artifact contents
_VOLATILE = {"jobs", "out", "config", "func", "verbose", "command"}


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- helpers ---------------------------------------------------------------------------


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        t = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return t.isoformat().replace("+00:00", "Z")


def _plain(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def write_manifest(out_dir: Path, args, inputs: dict, seeds: dict, artifacts: list) -> Path:
    config = {k: _plain(v) for k, v in sorted(vars(args).items()) if k not in _VOLATILE}
    doc = {
        "command": args.command,
        "config": config,
        "seeds": seeds,
        "inputs": {name: {"path": str(p), "sha256": sha256_file(p)} for name, p in inputs.items()},
        "artifacts": {a: sha256_file(out_dir / a) for a in sorted(artifacts)},
        "tool": {"name": "tdcnet", "version": __version__},
        "timestamp": _timestamp(),
    }
    path = out_dir / "manifest.json"
    _write_text(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _k_policy(args) -> VoltageCoefficient:
    if args.k_policy == "unit":
        return UNIT_K
    return VoltageCoefficient(comm_default=args.comm_k)


def _weighted(net, args):
    if args.weighting == "stored":
        return net
    return assign_weights(net, args.weighting, args.normalize)


def _load_config(path) -> dict:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        try:
            doc = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    else:
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: config must be a table/object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


# -- commands --------------------------------------------------------------------------


def cmd_build(args) -> int:
    transmission = Path(args.transmission) if args.transmission else None
    inputs = {}
    if transmission is not None:
        t_net = load_transmission(transmission)
        inputs["transmission"] = transmission
    else:
        from importlib import resources

        with resources.as_file(default_transmission_path()) as p:
            t_net = load_transmission(p)
            inputs["transmission"] = Path(p)
    templates = bundled_templates()
    for spec in args.feeder_template or []:
        tid, sep, p = spec.partition("=")
        if not sep:
            raise UsageError(f"--feeder-template expects ID=PATH, got {spec!r}")
        templates[tid] = load_template(p)
        inputs[f"feeder:{tid}"] = Path(p)
    assignments = None
    if args.assignments:
        assignments = _load_assignments(Path(args.assignments))
        inputs["assignments"] = Path(args.assignments)
    cfg = SynthConfig(
        rng_seed=args.seed,
        rewire_fraction=args.rewire,
        ders_per_feeder=args.ders_per_feeder,
        **({"feeder_assignments": assignments} if assignments is not None else {}),
    )
    net = synthesize(cfg, t_net, templates, args.weighting, args.normalize)
    out = _out_dir(args)
    write_network(net, out / "network.json")
    write_manifest(out, args, inputs, {"seed": args.seed}, ["network.json"])
    counts = {l: net.layer_counts(l) for l in net.layers}
    print(" ".join(f"{l}: N={n} L={m}" for l, (n, m) in counts.items()))
    return 0


def _load_assignments(path: Path):
    """Assignment file: JSON object {substation: template id} or CSV rows."""
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        return tuple((str(k), str(v)) for k, v in doc.items())
    rows = []
    for i, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ValidationError(f"{path}:{i}: expected 'substation,template'")
        if i == 1 and parts[0].lower() in ("node", "substation"):
            continue
        rows.append((parts[0], parts[1]))
    return tuple(rows)



def cmd_props(args) -> int:
    net = read_network(args.network)
    rows, pmf_rows = [], []
    for layer in net.layers:
        sub = layer_subgraph(net, layer)
        n, m = sub.layer_counts(layer)
        if n == 0:
            rows.append([layer, 0, 0, "empty", "empty", "empty"])
            continue
        pmf = degree_pmf(sub)
        try:
            eff = network_efficiency(_weighted(sub, args))
        except TooFewNodes:
            eff = math.nan
        rows.append([layer, n, m, pmf.k_avg, pmf.k_max, eff])
        pmf_rows += [[layer, k, p] for k, p in pmf.bins.items()]
    table = csv_text(["layer", "N", "L", "k_avg", "k_max", "efficiency"], rows)
    sys.stdout.write(table)
    if args.out:
        out = _out_dir(args)
        _write_text(out / "properties.csv", table)
        _write_text(out / "degree_pmf.csv", csv_text(["layer", "degree", "probability"], pmf_rows))
        write_manifest(out, args, {"network": Path(args.network)}, {},
                       ["properties.csv", "degree_pmf.csv"])
    return 0


def _sweep_artifacts(out: Path, result, tag: str, k: int, bins) -> list:
    i, j = result.direction
    names = {
        f"sweep_{tag}.csv": sweep_csv(result),
        f"histogram_{tag}.csv": histogram_csv(histogram(result, bins)),
        f"groups_{tag}.csv": groups_csv(group_stats(result, "der" if i == "D" else "feeder")),
        f"top_{tag}.csv": top_table_csv(result, k),
        f"report_{tag}.json": report_json(result, bins, k),
    }
    for name, text in names.items():
        _write_text(out / name, text)
    return list(names)


def _run_sweep(net, args, i, j):
    if i == j:
        raise InvalidDirection(f"--from and --to must differ, got {i}->{j}")
    return removal_sweep(net, i, j, _k_policy(args), seed=args.seed, jobs=args.jobs)


def cmd_cross(args) -> int:
    net = _weighted(read_network(args.network), args)
    result = _run_sweep(net, args, args.from_layer, args.to_layer)
    out = _out_dir(args)
    tag = f"{args.from_layer}_{args.to_layer}"
    arts = _sweep_artifacts(out, result, tag, args.top, args.bins)
    write_manifest(out, args, {"network": Path(args.network)}, {"seed": args.seed}, arts)
    sys.stdout.write(top_table_csv(result, args.top))
    return 0


def cmd_sweep_all(args) -> int:
    net = _weighted(read_network(args.network), args)
    out = _out_dir(args)
    arts = []
    for i, j in DIRECTIONS:
        if i not in net.layers or j not in net.layers or not net.layer_nodes(i) or not net.layer_nodes(j):
            log.warning("skipping %s->%s: layer missing or empty", i, j)
            continue
        log.info("sweep %s->%s", i, j)
        arts += _sweep_artifacts(out, _run_sweep(net, args, i, j), f"{i}_{j}", args.top, args.bins)
    write_manifest(out, args, {"network": Path(args.network)}, {"seed": args.seed}, arts)
    return 0


def cmd_compare(args) -> int:
    net = read_network(args.network)
    out = _out_dir(args)
    k = _k_policy(args)
    i, j = args.from_layer, args.to_layer
    if args.versus_single:
        # same layer alone versus the cross-layer view, both physical
        if i == j:
            raise InvalidDirection("--versus-single needs two distinct layers")
        single = removal_sweep(assign_weights(layer_subgraph(net, i), "physical", args.normalize),
                               i, i, k, jobs=args.jobs, allow_same=True)
        cross = removal_sweep(assign_weights(net, "physical", args.normalize), i, j, k,
                              jobs=args.jobs)
        rows = []
        a, b = rank_top(single, "drop", args.top), rank_top(cross, "drop", args.top)
        for r in range(max(len(a), len(b))):
            row = [r + 1]
            for side, res in ((a, single), (b, cross)):
                if r < len(side):
                    ref, v = side[r]
                    row += [ref.name, 100.0 * v, res.attrs[ref].voltage_kv]
                else:
                    row += ["", "", ""]
            rows.append(row)
        overlap = len({x for x, _ in a} & {x for x, _ in b})
        text = csv_text(["rank", f"{i}_only_node", f"{i}_only_drop_pct", f"{i}_only_voltage_kv",
                          f"{i}_{j}_node", f"{i}_{j}_drop_pct", f"{i}_{j}_voltage_kv"], rows)
        name = f"versus_single_{i}_{j}.csv"
    else:
        if i != j and (i not in net.layers or j not in net.layers):
            raise ValidationError(f"network lacks layer {i if i not in net.layers else j}")
        cmp = compare_weightings(net, i, j, k, top=args.top, normalize=args.normalize,
                                 jobs=args.jobs, seed=args.seed)
        text, overlap = comparison_csv(cmp), cmp.overlap
        name = f"compare_{i}_{j}.csv"
    _write_text(out / name, text)
    summary = json.dumps({"from": i, "to": j, "overlap": overlap, "top": args.top},
                         indent=1, sort_keys=True) + "\n"
    _write_text(out / f"{Path(name).stem}_summary.json", summary)
    write_manifest(out, args, {"network": Path(args.network)}, {"seed": args.seed},
                   [name, f"{Path(name).stem}_summary.json"])
    sys.stdout.write(text)
    return 0


def cmd_delaysim(args) -> int:
    model = DelayModel(per_hop_base_ms=args.hop_ms, jitter_fraction=args.jitter,
                       trials=args.trials, rng_seed=args.seed)
    net = read_network(args.network)
    if args.layer not in net.layers:
        raise ValidationError(f"network has no layer {args.layer!r}")
    if not net.layer_nodes(args.layer):
        raise EmptyLayer(f"layer {args.layer!r} is empty")
    report = delay_impact_sweep(net, model, layer=args.layer)
    out = _out_dir(args)
    _write_text(out / "delays.csv", delay_csv(report))
    summary = {"baseline_ms": report.baseline_ms, "baseline_pairs": report.baseline_pairs,
               "layer": args.layer, "top": [r.node.name for r in report.rows[:args.top]]}
    _write_text(out / "delays_summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    write_manifest(out, args, {"network": Path(args.network)}, {"seed": args.seed},
                   ["delays.csv", "delays_summary.json"])
    print(f"baseline median delay {report.baseline_ms!r} ms over {report.baseline_pairs} pairs")
    return 0


def cmd_convert_matpower(args) -> int:
    doc = convert_matpower(args.case, attribution=args.attribution, units=args.units)
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        _write_text(Path(args.output), text)
    return 0


# -- parser ----------------------------------------------------------------------------


def _add_weighting(p, default="physical", choices=("physical", "unit", "stored")):
    p.add_argument("--weighting", choices=list(choices), default=default,
                   help="edge weighting applied before computing")
    p.add_argument("--normalize", choices=["per-layer", "global"], default="per-layer",
                   help="population over which impedance magnitudes are averaged")


def _add_k(p):
    p.add_argument("--k-policy", choices=["voltage", "unit"], default="voltage",
                   help="efficiency coefficient: nominal voltage or 1 for every node")
    p.add_argument("--comm-k", type=float, default=1.0,
                   help="coefficient for nodes without a voltage (communication nodes)")


def _add_common(p, out_required=True):
    p.add_argument("--config", help="TOML or JSON file with option defaults (flags win)")
    p.add_argument("-o", "--out", required=out_required, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def _bins(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bin edges {text!r}") from None


def _add_report(p):
    p.add_argument("--top", type=int, default=10, help="ranking length")
    p.add_argument("--bins", type=_bins, default=None,
                   help="histogram edges in percent, comma separated")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="tdcnet", description="Multilayer T&D&C network analysis",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"tdcnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="synthesize the T&D&C testbed", formatter_class=fmt)
    _add_common(p)
    _add_weighting(p, choices=("physical", "unit"))
    p.add_argument("--transmission", help="substation JSON file (default: bundled ACTIVSg200-derived)")
    p.add_argument("--feeder-template", action="append", metavar="ID=PATH",
                   help="override or add a feeder template")
    p.add_argument("--assignments", help="substation->template file (JSON object or CSV)")
    p.add_argument("--rewire", type=float, default=0.10, help="fraction of T edges rewired for C")
    p.add_argument("--ders-per-feeder", type=int, default=3)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("props", help="per-layer structural properties", formatter_class=fmt)
    p.add_argument("network")
    _add_common(p, out_required=False)
    _add_weighting(p, default="unit")
    p.set_defaults(func=cmd_props)

    p = sub.add_parser("cross", help="removal sweep for one direction", formatter_class=fmt)
    p.add_argument("network")
    p.add_argument("--from", dest="from_layer", required=True)
    p.add_argument("--to", dest="to_layer", required=True)
    _add_common(p)
    _add_weighting(p)
    _add_k(p)
    _add_report(p)
    p.set_defaults(func=cmd_cross)

    p = sub.add_parser("sweep-all", help="removal sweeps for all six directions", formatter_class=fmt)
    p.add_argument("network")
    _add_common(p)
    _add_weighting(p)
    _add_k(p)
    _add_report(p)
    p.set_defaults(func=cmd_sweep_all)

    p = sub.add_parser("compare", help="unit versus physical weighting rankings", formatter_class=fmt)
    p.add_argument("network")
    p.add_argument("--from", dest="from_layer", default="T")
    p.add_argument("--to", dest="to_layer", default="T",
                   help="equal to --from for a single-layer comparison")
    p.add_argument("--versus-single", action="store_true",
                   help="compare the single-layer ranking of --from with the --from->--to ranking")
    p.add_argument("--normalize", choices=["per-layer", "global"], default="per-layer")
    _add_common(p)
    _add_k(p)
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("delaysim", help="packet-delay proxy over the C layer", formatter_class=fmt)
    p.add_argument("network")
    p.add_argument("--layer", default="C")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--jitter", type=float, default=0.1, help="max per-hop jitter fraction")
    p.add_argument("--hop-ms", type=float, default=1.0, help="base per-hop delay")
    p.add_argument("--top", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=cmd_delaysim)

    p = sub.add_parser("convert-matpower", help="MATPOWER case to substation JSON",
                       formatter_class=fmt)
    p.add_argument("case")
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.add_argument("--attribution", help="attribution text stored in the output")
    p.add_argument("--units", choices=["ohm", "pu"], default="ohm", help="impedance unit written")
    p.set_defaults(func=cmd_convert_matpower)
    return parser


def _apply_config(parser, argv):
    """Re-parse with config-file values as defaults so explicit flags win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cfg = _load_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ValidationError(f"{args.config}: unknown option(s) {', '.join(unknown)}")
    subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(levelname)s: %(message)s", stream=sys.stderr)
        if getattr(args, "jobs", 1) < 1:
            raise ValidationError("--jobs must be >= 1")
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
