"""Command-line pipeline: dataset -> train -> monitor -> prioritize ->
repair / testgen / eval, each stage exchanging JSON/CSV artifacts.

Every stage is seeded and echoes its full configuration plus the tool
version into the output metadata, so reruns with the same arguments
produce byte-identical files.  Dict-shaped JSON artifacts carry the
metadata inline under a "_meta" key (loaders ignore it); list-shaped
files (JSONL, CSV, report arrays) get a sibling ``<name>.meta.json``.

Exit codes: 0 success, 1 domain error, 2 I/O or parse error (argparse
usage errors included), 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import moons_dataset, select_start
from .boxes import CornerRegion
from .errors import BoxmonError, ConfigError, ParseError
from .monitor import BoxMonitor, read_features_csv
from .network import (
    TrainConfig,
    accuracy,
    features_at,
    forward_from,
    init_network,
    load_network,
    network_to_json_dict,
    read_dataset_csv,
    train,
    training_loss_and_grads,
    write_dataset_csv,
)
from .prioritize import prioritize_monitor, read_corners_jsonl, write_corners_jsonl
from .repair import build_modify_dataset, repair, write_modify_csv
from .testgen import TestGenConfig, generate_test_case, write_reports_json, write_trace_csv


# -- small helpers -----------------------------------------------------

def _write_json(obj: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _out(args, name: str) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = Path(args.out_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _sidecar(args, path: Path) -> None:
    _write_json({"_meta": args.meta}, Path(str(path) + ".meta.json"))


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(
            "missing required argument(s): "
            + ", ".join("--" + n.replace("_", "-") for n in missing)
        )


def _load_monitor(path: str) -> BoxMonitor:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return BoxMonitor.from_json_dict(obj)


def _load_features(args, layer: int | None = None) -> np.ndarray:
    """Feature matrix from --features, or --net + --data pushed to a layer."""
    if args.features is not None:
        return read_features_csv(args.features)
    if args.net is None or args.data is None:
        raise ConfigError("need either --features or both --net and --data")
    net = load_network(args.net)
    data = read_dataset_csv(args.data)
    return features_at(net, layer if layer is not None else args.layer, data.inputs)


def _kept_regions(rows: list[dict]) -> list[CornerRegion]:
    return [
        CornerRegion(
            int(o["box"]),
            np.asarray(o["region_lower"], dtype=float),
            np.asarray(o["region_upper"], dtype=float),
            str(o["bits"]),
        )
        for o in rows
        if o["discarded_by"] is None
    ]


# -- subcommands -------------------------------------------------------

def cmd_gen_data(args) -> None:
    data = moons_dataset(args.n, args.noise, args.seed)
    path = _out(args, args.out)
    write_dataset_csv(data, path)
    _sidecar(args, path)
    print(f"wrote {path} ({data.inputs.shape[0]} rows, {data.labels.shape[1]} classes)")


def cmd_train(args) -> None:
    _require(args, "data", "dims")
    data = read_dataset_csv(args.data)
    net = init_network(args.dims, seed=args.seed)
    cfg = TrainConfig(
        optimizer=args.optimizer,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        frozen_prefix=args.frozen_prefix,
    )
    net = train(net, data, cfg)
    acc = accuracy(net, data)
    loss = float(training_loss_and_grads(net, data.inputs, data.labels)[0])
    obj = network_to_json_dict(net)
    obj["_meta"] = dict(args.meta, metrics={"train_accuracy": acc, "train_loss": loss})
    path = _out(args, args.out)
    _write_json(obj, path)
    print(f"wrote {path}  accuracy={acc:.4f} loss={loss:.6f}")


def cmd_build_monitor(args) -> None:
    X = _load_features(args)
    mon = BoxMonitor(
        k=args.k,
        delta_fraction=args.delta_fraction,
        phi=args.phi,
        layer=args.layer,
        random_state=args.seed,
    ).fit(X)
    report = mon.validate(X)
    obj = mon.to_json_dict()
    obj["_meta"] = dict(args.meta, valid=report.ok)
    path = _out(args, args.out)
    _write_json(obj, path)
    print(f"wrote {path}  boxes={len(mon.boxes_)} dim={mon.n_features_in_} valid={report.ok}")


def cmd_prioritize(args) -> None:
    _require(args, "monitor")
    mon = _load_monitor(args.monitor)
    X = _load_features(args, layer=mon.layer)
    results = prioritize_monitor(
        mon, X, args.delta_h, args.cap, cross_box=not args.no_cross_box
    )
    n_corners = sum(len(r.extracted) for r in results)
    path = _out(args, args.out)
    write_corners_jsonl(results, path)
    _sidecar(args, path)
    for r in results:
        n_kept = len(r.kept)
        print(
            f"box {r.box_index}: kept {n_kept}, discarded {len(r.extracted) - n_kept}, "
            f"unsupported-set size {r.stats['sat_result']}"
        )
    print(f"wrote {path} ({n_corners} corners)")


def cmd_repair(args) -> None:
    _require(args, "net", "data", "monitor", "corners")
    net = load_network(args.net)
    data = read_dataset_csv(args.data)
    mon = _load_monitor(args.monitor)
    regions = _kept_regions(read_corners_jsonl(args.corners))
    modify = build_modify_dataset(data, net, mon.layer, regions, args.rho, args.seed)
    cfg = TrainConfig(
        optimizer=args.optimizer,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    repaired = repair(net, modify, mon.layer, cfg)

    mpath = _out(args, args.modify_out)
    write_modify_csv(modify, mpath)
    _sidecar(args, mpath)
    obj = network_to_json_dict(repaired)
    obj["_meta"] = dict(args.meta)
    path = _out(args, args.out)
    _write_json(obj, path)

    mask = modify.corner_mask
    if mask.any():
        before = forward_from(net, mon.layer, modify.features[mask]).max(axis=1).mean()
        after = forward_from(repaired, mon.layer, modify.features[mask]).max(axis=1).mean()
        print(f"corner-sample mean max-softmax: {before:.4f} -> {after:.4f}")
    print(
        f"wrote {path}  accuracy {accuracy(net, data):.4f} -> {accuracy(repaired, data):.4f}"
    )


def cmd_testgen(args) -> None:
    _require(args, "net", "monitor", "corners", "data")
    net = load_network(args.net)
    mon = _load_monitor(args.monitor)
    data = read_dataset_csv(args.data)
    regions = _kept_regions(read_corners_jsonl(args.corners))
    feats = features_at(net, mon.layer, data.inputs)

    reports = []
    for reg in regions:
        best = None
        for t in range(args.tries):
            x0, y = select_start(data, feats, reg.center, t, args.start_scale)
            cfg = TestGenConfig(
                lam=args.lam,
                steps=args.steps,
                learning_rate=args.lr,
                seed=args.seed + t,
                init_noise=args.noise,
            )
            rep = generate_test_case(net, x0, y, reg, mon, cfg)
            ratio = rep.feature_corner_distance / max(rep.start_feature_distance, 1e-12)
            if best is None or ratio < best[0]:
                best = (ratio, rep)
            if rep.in_corner or ratio < 0.25:
                break
        ratio, rep = best
        reports.append(rep)
        print(
            f"box {reg.box_index} corner {reg.bits}: in_corner={rep.in_corner} "
            f"distance_ratio={ratio:.3f} monitor_accepts={rep.monitor_accepts}"
        )

    path = _out(args, args.out)
    write_reports_json(reports, path)
    _sidecar(args, path)
    if args.emit_trace:
        stem = path.with_suffix("")
        for rep in reports:
            write_trace_csv(rep, Path(f"{stem}_trace_b{rep.corner_box}_{rep.corner_bits}.csv"))
    print(f"wrote {path} ({len(reports)} reports)")


def _corner_samples(regions, rho, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    chunks = [rng.uniform(r.lower, r.upper, size=(rho, r.dim)) for r in regions]
    if not chunks:
        return np.empty((0, 0))
    return np.concatenate(chunks, axis=0)


def _softmax_stats(net, layer, samples) -> dict:
    if samples.shape[0] == 0:
        return {"count": 0, "histogram": [0] * 10, "mean_max_softmax": None}
    top = forward_from(net, layer, samples).max(axis=1)
    hist, _ = np.histogram(top, bins=10, range=(0.0, 1.0))
    return {
        "count": int(top.size),
        "histogram": [int(c) for c in hist],
        "mean_max_softmax": float(top.mean()),
    }


def cmd_eval(args) -> None:
    _require(args, "net", "monitor", "corners")
    net = load_network(args.net)
    mon = _load_monitor(args.monitor)
    regions = _kept_regions(read_corners_jsonl(args.corners))
    if not regions:
        warnings.warn("corner list is empty; histograms will be empty")
    samples = _corner_samples(regions, args.rho, args.seed)

    report = {
        "_meta": args.meta,
        "bin_edges": [i / 10 for i in range(11)],
        "before": _softmax_stats(net, mon.layer, samples),
        "after": None,
        "acceptance_rate": {"before": None, "after": None},
    }
    after_net = load_network(args.after) if args.after else None
    if after_net is not None:
        report["after"] = _softmax_stats(after_net, mon.layer, samples)
    if args.data:
        data = read_dataset_csv(args.data)

        def rate(n):
            return float((mon.predict(features_at(n, mon.layer, data.inputs)) == 1).mean())

        report["acceptance_rate"]["before"] = rate(net)
        if after_net is not None:
            report["acceptance_rate"]["after"] = rate(after_net)

    path = _out(args, args.out)
    _write_json(report, path)
    b = report["before"]["mean_max_softmax"]
    a = report["after"]["mean_max_softmax"] if report["after"] else None
    print(f"wrote {path}  mean max-softmax before={b} after={a}")


def cmd_check(args) -> int | None:
    _require(args, "monitor")
    mon = _load_monitor(args.monitor)
    X = _load_features(args, layer=mon.layer)
    rep = mon.validate(X)
    out = {
        "ok": rep.ok,
        "boxes_well_formed": rep.boxes_well_formed,
        "data_covered": rep.data_covered,
        "bounds_tight": rep.bounds_tight,
        "malformed_box": rep.malformed_box,
        "uncovered_row": rep.uncovered_row,
        "loose_bound": list(rep.loose_bound) if rep.loose_bound else None,
    }
    print(json.dumps(out, sort_keys=True, indent=1))
    return None if rep.ok else 1


# -- parser ------------------------------------------------------------

def _build_parser() -> tuple[argparse.ArgumentParser, argparse._SubParsersAction]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    common.add_argument(
        "--config",
        help="JSON file of argument defaults (keys use underscores, e.g. delta_fraction)",
    )
    common.add_argument("--out-dir", default=".", help="directory for output artifacts")

    parser = argparse.ArgumentParser(
        prog="boxmon",
        description="Boxed-abstraction monitors: corner prioritization, repair, test generation.",
    )
    parser.add_argument("--version", action="version", version=f"boxmon {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="write a synthetic 2-class dataset CSV")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--out", default="dataset.csv")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common], help="train a network on a dataset CSV")
    p.add_argument("--data", help="dataset CSV (x0..,y0.. columns)")
    p.add_argument(
        "--dims",
        type=lambda s: [int(t) for t in s.split(",")],
        help="comma-separated layer widths, e.g. 2,4,16,2",
    )
    p.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--frozen-prefix", type=int, default=0)
    p.add_argument("--out", default="network.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("build-monitor", parents=[common], help="fit a box monitor over features")
    p.add_argument("--features", help="feature CSV (f0,f1,.. columns)")
    p.add_argument("--net", help="network JSON (with --data, instead of --features)")
    p.add_argument("--data", help="dataset CSV whose inputs are pushed to --layer")
    p.add_argument("--layer", type=int, default=1)
    p.add_argument("--k", type=int, default=1, help="number of boxes")
    p.add_argument("--delta-fraction", type=float, default=0.05)
    p.add_argument("--phi", type=int, default=3, help="bits per dimension")
    p.add_argument("--out", default="monitor.json")
    p.set_defaults(func=cmd_build_monitor)

    p = sub.add_parser("prioritize", parents=[common], help="extract unsupported corners")
    p.add_argument("--monitor")
    p.add_argument("--features", help="feature CSV at the monitored layer")
    p.add_argument("--net", help="network JSON (with --data, instead of --features)")
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--delta-h", type=int, default=1, help="Hamming dilation rounds")
    p.add_argument("--cap", type=int, default=1000, help="max corners extracted per box")
    p.add_argument("--no-cross-box", action="store_true", help="skip cross-box rejection")
    p.add_argument("--out", default="corners.jsonl")
    p.set_defaults(func=cmd_prioritize)

    p = sub.add_parser("repair", parents=[common], help="retrain suffix layers on corner samples")
    p.add_argument("--net")
    p.add_argument("--data")
    p.add_argument("--monitor")
    p.add_argument("--corners")
    p.add_argument("--rho", type=int, default=10, help="samples per corner")
    p.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", default="repaired.json")
    p.add_argument("--modify-out", default="modify.csv")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("testgen", parents=[common], help="steer inputs into prioritized corners")
    p.add_argument("--net")
    p.add_argument("--monitor")
    p.add_argument("--corners")
    p.add_argument("--data", help="dataset CSV supplying start inputs")
    p.add_argument("--lam", type=float, default=1.0, help="cross-entropy term weight")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--noise", type=float, default=0.0, help="uniform start jitter half-width")
    p.add_argument("--tries", type=int, default=1, help="seeded attempts per corner")
    p.add_argument("--start-scale", type=float, default=1.0, help="push starts away from the input centroid")
    p.add_argument("--emit-trace", action="store_true", help="write per-corner loss trace CSVs")
    p.add_argument("--out", default="testgen.json")
    p.set_defaults(func=cmd_testgen)

    p = sub.add_parser("eval", parents=[common], help="max-softmax histograms over corner samples")
    p.add_argument("--net")
    p.add_argument("--after", help="second network JSON for before/after comparison")
    p.add_argument("--monitor")
    p.add_argument("--corners")
    p.add_argument("--data", help="dataset CSV for monitor acceptance rate")
    p.add_argument("--rho", type=int, default=10, help="samples per corner")
    p.add_argument("--out", default="eval.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", parents=[common], help="validate a monitor against features")
    p.add_argument("--monitor")
    p.add_argument("--features")
    p.add_argument("--net")
    p.add_argument("--data")
    p.set_defaults(func=cmd_check)

    return parser, sub


def _load_config(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{known.config}: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ParseError(f"{known.config}: config must be a JSON object")
    return cfg


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        parser, sub = _build_parser()
        cfg = _load_config(argv)
        if cfg:
            valid = {a.dest for sp in sub.choices.values() for a in sp._actions}
            unknown = sorted(set(cfg) - valid)
            if unknown:
                raise ConfigError(f"unknown config keys: {unknown}")
            # Subparsers parse into a fresh namespace, so defaults must be
            # planted on each subparser, not the root parser.
            for sp in set(sub.choices.values()):
                apply = {k: v for k, v in cfg.items() if k in {a.dest for a in sp._actions}}
                if apply:
                    sp.set_defaults(**apply)
        args = parser.parse_args(argv)
        meta_keys = {a.dest for a in sub.choices[args.command]._actions} - {"help", "config"}
        args.meta = {
            "version": __version__,
            "command": args.command,
            "config": {k: getattr(args, k) for k in sorted(meta_keys)},
        }
        rc = args.func(args)
        return 0 if rc is None else int(rc)
    except ConfigError as exc:
        print(f"boxmon: config error: {exc}", file=sys.stderr)
        return 3
    except ParseError as exc:
        print(f"boxmon: parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"boxmon: i/o error: {exc}", file=sys.stderr)
        return 2
    except BoxmonError as exc:
        print(f"boxmon: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
