"""Operator surface: train, eval, simulate, sweep, stability, export.

Every subcommand writes its primary artifacts plus a run manifest (config,
input/output hashes, seed, wall time) into --out-dir. Identical arguments
and seed reproduce byte-identical primary outputs.

Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dataset, export, metrics, simulator, stability, tao, tree
from .errors import DataError, NumericError, RadioselError

DEFAULT_LAMBDA_GRID = (0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
DEFAULT_INTERVALS = (5.0, 3.0, 2.0, 1.5, 1.4, 1.3)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


class _ManifestWriter:
    def __init__(self, subcommand: str, args: argparse.Namespace, out_dir: Path):
        self.doc = {
            "tool": "radiosel",
            "version": __version__,
            "subcommand": subcommand,
            "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
            "seed": getattr(args, "seed", None),
            "inputs": {},
            "outputs": {},
        }
        self.out_dir = out_dir
        self.start = time.monotonic()

    def add_input(self, path) -> None:
        p = Path(path)
        if not p.exists():
            raise DataError(f"no such file: {p}")
        self.doc["inputs"][str(p)] = _sha256(p)

    def add_output(self, path) -> None:
        p = Path(path)
        self.doc["outputs"][str(p)] = _sha256(p)

    def extra(self, key, value) -> None:
        self.doc[key] = value

    def write(self) -> None:
        self.doc["wall_time_s"] = time.monotonic() - self.start
        _atomic_write(self.out_dir / "manifest.json",
                      json.dumps(self.doc, indent=2, sort_keys=True, default=str) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_float_list(text: str, flag: str):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise DataError(f"{flag} expects a comma-separated list of numbers, got {text!r}")


def _selectors(args, model=None):
    sel = [simulator.AlwaysSelector(0), simulator.AlwaysSelector(1),
           simulator.OracleSelector(), simulator.ThresholdSelector(args.threshold_hn)]
    if model is not None:
        sel.append(simulator.TreeSelector(model))
    return sel


# ---------- train ----------

def cmd_train(args) -> int:
    out = _out_dir(args)
    manifest = _ManifestWriter("train", args, out)
    if args.data:
        manifest.add_input(args.data)
        ds = dataset.load_dataset(args.data)
    else:
        manifest.add_input(args.traces)
        ds = dataset.label_traces(dataset.load_traces(args.traces))
    scaler = None
    if not args.raw_features:
        ds = dataset.standardize(ds)
        scaler = ds.scaler
    train_ds, val_ds, test_ds = dataset.split(ds, (0.6, 0.2, 0.2), seed=args.seed)

    if args.lam is not None:
        lambdas = [args.lam]
    elif args.sweep_lambdas is not None:
        lambdas = _parse_float_list(args.sweep_lambdas, "--sweep-lambdas")
    else:
        lambdas = list(DEFAULT_LAMBDA_GRID)

    sweep_table = []
    best = None
    for lam in lambdas:
        cfg = tao.TaoConfig(depth=args.depth, lam=lam, seed=args.seed,
                            init_policy=args.init, max_passes=args.passes)
        result = tao.train(train_ds, cfg, val=val_ds)
        val_cwa = metrics.cwa(result.tree, val_ds)
        sweep_table.append({"lambda": lam, "val_cwa": val_cwa,
                            "init_used": result.init_used,
                            "n_leaves": result.tree.n_leaves()})
        # tie prefers the sparser model (larger lambda)
        if best is None or val_cwa > best[0] or (val_cwa == best[0] and lam > best[1]):
            best = (val_cwa, lam, cfg, result)
    _, lam, cfg, result = best

    final = tree.ObliqueTree(result.tree.nodes, result.tree.root,
                             scaler=scaler, lam=lam)
    model_path = out / "model.json"
    tree.save(final, model_path)
    manifest.add_output(model_path)
    manifest.extra("training", result.to_manifest(cfg))
    manifest.extra("lambda_sweep", sweep_table)

    for i, value in enumerate(result.history):
        stage = "init" if i == 0 else f"pass {i}"
        print(f"objective[{stage}] = {value:.6f}")
    print(f"lambda = {lam:g} (init {result.init_used}, stop {result.stop_reason})")
    for name, part in (("train", train_ds), ("val", val_ds), ("test", test_ds)):
        print(f"{name} CWA = {metrics.cwa(result.tree, part):.4f}%")
    print(f"model -> {model_path}")
    manifest.write()
    return 0


# ---------- eval ----------

def cmd_eval(args) -> int:
    out = _out_dir(args)
    manifest = _ManifestWriter("eval", args, out)
    manifest.add_input(args.model)
    manifest.add_input(args.data)
    model = tree.load(args.model)
    ds = dataset.load_dataset(args.data)
    location = args.location or Path(args.data).stem
    model_name = Path(args.model).stem

    rows = []
    value = metrics.cwa(model, ds)
    rows.append([model_name, location, "all", f"{value:.6f}", "0",
                 str(model.depth), str(model.n_leaves())])
    breakdown = metrics.error_breakdown(model, ds, threshold=args.cost_threshold)
    print(f"CWA = {value:.4f}%")
    print(f"errors: {breakdown.n_high} high-cost (>{breakdown.threshold:g} bps, "
          f"{breakdown.loss_high:.0f} bps lost), {breakdown.n_low} low-cost "
          f"({breakdown.loss_low:.0f} bps lost)")

    if args.kfold:
        lam = model.lam if model.lam is not None else 0.0
        depth = max(1, model.depth)

        def trainer(train_ds):
            cfg = tao.TaoConfig(depth=depth, lam=lam, seed=args.seed,
                                init_policy="cart")
            return tao.train(train_ds, cfg).tree

        fold_ds = dataset.standardize(ds) if model.scaler is not None else ds
        kres = metrics.kfold_cwa(fold_ds, trainer, k=args.kfold, seed=args.seed)
        for i in range(kres.k):
            rows.append([model_name, location, f"fold{i}-test",
                         f"{kres.test_cwa[i]:.6f}", "0",
                         f"{kres.depths[i]}", f"{kres.leaves[i]}"])
        tr = kres.train_mean_std
        te = kres.test_mean_std
        rows.append([model_name, location, "train", f"{tr[0]:.6f}", f"{tr[1]:.6f}",
                     f"{kres.depth_mean:.6g}", f"{kres.leaves_mean:.6g}"])
        rows.append([model_name, location, "test", f"{te[0]:.6f}", f"{te[1]:.6f}",
                     f"{kres.depth_mean:.6g}", f"{kres.leaves_mean:.6g}"])
        print(f"{args.kfold}-fold test CWA = {te[0]:.4f} +- {te[1]:.4f}%")

    metrics_path = out / "metrics.csv"
    _write_csv(metrics_path,
               ("model", "location", "split", "cwa_mean", "cwa_std",
                "depth_mean", "leaves_mean"), rows)
    manifest.add_output(metrics_path)

    breakdown_path = out / "breakdown.csv"
    _write_csv(breakdown_path,
               ("threshold_bps", "n_high", "n_low", "loss_high_bps", "loss_low_bps"),
               [[f"{breakdown.threshold:g}", breakdown.n_high, breakdown.n_low,
                 f"{breakdown.loss_high:.17g}", f"{breakdown.loss_low:.17g}"]])
    manifest.add_output(breakdown_path)
    manifest.write()
    return 0


# ---------- simulate ----------

def cmd_simulate(args) -> int:
    out = _out_dir(args)
    manifest = _ManifestWriter("simulate", args, out)
    if args.traces:
        manifest.add_input(args.traces)
        traces = dataset.load_traces(args.traces)
    else:
        cfg = simulator.ScenarioConfig.load(args.scenario) if args.scenario \
            else simulator.ScenarioConfig()
        if args.scenario:
            manifest.add_input(args.scenario)
        traces = simulator.generate(cfg, seed=args.seed)

    trace_path = out / "trace.csv"
    dataset.save_traces(traces, trace_path)
    manifest.add_output(trace_path)

    ds = dataset.label_traces(traces)
    data_path = out / "dataset.csv"
    dataset.save_dataset(ds, data_path)
    manifest.add_output(data_path)

    model = None
    if args.model:
        manifest.add_input(args.model)
        model = tree.load(args.model)

    cdf_rows, replay_rows = [], []
    for selector in _selectors(args, model):
        result = simulator.replay(traces, selector)
        for pct, tp in result.cdf:
            cdf_rows.append([result.selector, pct, f"{tp:.17g}"])
        replay_rows.append([result.selector,
                            f"{result.mean_throughput_bps:.17g}",
                            f"{result.performance_ratio:.17g}",
                            f"{result.oracle_gap_bps:.17g}",
                            f"{result.gain_vs_best_single_pct:.17g}",
                            f"{result.gain_vs_worst_single_pct:.17g}"])
        print(f"{result.selector}: mean {result.mean_throughput_bps:.1f} bps, "
              f"ratio {result.performance_ratio:.4f}")

    cdf_path = out / "cdf.csv"
    _write_csv(cdf_path, ("selector", "percentile", "throughput_bps"), cdf_rows)
    manifest.add_output(cdf_path)
    replay_path = out / "replay.csv"
    _write_csv(replay_path,
               ("selector", "mean_throughput_bps", "performance_ratio",
                "oracle_gap_bps", "gain_vs_best_single_pct", "gain_vs_worst_single_pct"),
               replay_rows)
    manifest.add_output(replay_path)
    manifest.write()
    return 0


# ---------- sweep ----------

def cmd_sweep(args) -> int:
    out = _out_dir(args)
    manifest = _ManifestWriter("sweep", args, out)
    cfg = simulator.ScenarioConfig.load(args.scenario) if args.scenario \
        else simulator.ScenarioConfig()
    if args.scenario:
        manifest.add_input(args.scenario)
    intervals = _parse_float_list(args.intervals, "--intervals")
    model = None
    if args.model:
        manifest.add_input(args.model)
        model = tree.load(args.model)

    rows = []
    for selector in _selectors(args, model):
        for row in simulator.interval_sweep(cfg, intervals, selector, seed=args.seed):
            rows.append([f"{row.interval_s:g}", row.selector,
                         f"{row.performance_ratio:.17g}",
                         f"{row.mean_latency_ms:.17g}"])
    sweep_path = out / "sweep.csv"
    _write_csv(sweep_path,
               ("interval_s", "selector", "performance_ratio", "mean_latency_ms"),
               rows)
    manifest.add_output(sweep_path)
    print(f"sweep -> {sweep_path} ({len(rows)} rows)")
    manifest.write()
    return 0


# ---------- stability ----------

def cmd_stability(args) -> int:
    out = _out_dir(args)
    manifest = _ManifestWriter("stability", args, out)
    manifest.add_input(args.data)
    ds = dataset.load_dataset(args.data)
    if not args.raw_features:
        ds = dataset.standardize(ds)
    train_ds, test_ds = dataset.split(ds, (0.8, 0.2), seed=args.seed)
    fractions = _parse_float_list(args.fractions, "--fractions")
    cfg = tao.TaoConfig(depth=args.depth, lam=args.lam if args.lam is not None else 0.0,
                        seed=args.seed, init_policy=args.init, max_passes=args.passes)
    rep = stability.stability_run(train_ds, test_ds, cfg,
                                  fractions=fractions, seed=args.seed)

    names = ds.feature_names
    rows = []
    for stage in rep.stages:
        for nid in stage.tree.decision_ids():
            node = stage.tree.nodes[nid]
            rows.append([nid, f"{stage.fraction:g}"]
                        + [f"{w:.17g}" for w in node.w] + [f"{node.w0:.17g}"])
    stability_path = out / "stability.csv"
    _write_csv(stability_path, ("node_id", "fraction") + tuple(f"w_{n}" for n in names)
               + ("constant",), rows)
    manifest.add_output(stability_path)

    table = ["node  fraction  " + "  ".join(f"{n:>12}" for n in names) + "  constant"]
    for row in sorted(rows, key=lambda r: (int(r[0]), float(r[1]))):
        table.append(f"{row[0]:>4}  {row[1]:>8}  "
                     + "  ".join(f"{float(v):>12.6f}" for v in row[2:]))
    table_path = out / "stability_table.txt"
    _atomic_write(table_path, "\n".join(table) + "\n")
    manifest.add_output(table_path)

    for stage in rep.stages:
        print(f"fraction {stage.fraction:g}: test error {stage.test_error_pct:.2f}%, "
              f"signature {stage.signature}")
    print(f"skeleton stable across all fractions: {rep.all_signatures_equal}")
    print(f"test error monotone nonincreasing: {rep.test_error_monotone_nonincreasing}")
    manifest.extra("stability", {
        "fractions": rep.fractions,
        "signatures": [s.signature for s in rep.stages],
        "test_error_pct": [s.test_error_pct for s in rep.stages],
        "all_signatures_equal": rep.all_signatures_equal,
    })
    manifest.write()
    return 0


# ---------- export ----------

def cmd_export(args) -> int:
    out = _out_dir(args)
    manifest = _ManifestWriter("export", args, out)
    manifest.add_input(args.model)
    model = tree.load(args.model)
    model = tree.prune(model)
    program = export.codegen(model)

    # verify against the model through the reference interpreter before shipping
    interp = export.ProgramInterpreter(program.text)
    rng = np.random.default_rng(args.seed)
    dim = model.dim if model.dim is not None else 4
    X = rng.uniform(-5.0, 5.0, size=(2000, dim))
    if model.scaler is not None:
        X = model.scaler.inverse(X)
    for x in X:
        if interp.predict(x) != model.predict(x):
            raise NumericError("emitted program disagrees with the model")

    program_path = out / "program.txt"
    _atomic_write(program_path, program.text)
    manifest.add_output(program_path)

    rows = []
    names = export.feature_names_for(model)
    for row in export.report(model):
        rows.append([row.node_id, row.depth]
                    + [f"{w:.17g}" for w in row.weights]
                    + [f"{row.bias:.17g}", row.l0, "|".join(row.dominant)])
    report_path = out / "report.csv"
    _write_csv(report_path, ("node_id", "depth") + tuple(f"w_{n}" for n in names)
               + ("constant", "l0", "dominant"), rows)
    manifest.add_output(report_path)
    print(f"program -> {program_path} (model sha256 {program.model_hash[:12]}..., "
          f"verified on {len(X)} random inputs)")
    manifest.write()
    return 0


# ---------- parser ----------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radiosel", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a cost-sensitive oblique tree")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="labeled dataset CSV")
    src.add_argument("--traces", help="raw dual-radio trace CSV (labeled on the fly)")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="fix the L1 strength and skip the sweep")
    p.add_argument("--sweep-lambdas", default=None,
                   help="comma-separated lambda grid (default {0} u 10^-4..10^2)")
    p.add_argument("--init", choices=("random", "cart", "best_of_both"),
                   default="best_of_both")
    p.add_argument("--passes", type=int, default=20)
    p.add_argument("--raw-features", action="store_true",
                   help="skip feature standardization")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--kfold", type=int, default=None)
    p.add_argument("--location", default=None, help="label for the metrics rows")
    p.add_argument("--cost-threshold", type=float, default=200.0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="generate a trace and replay selectors")
    common(p)
    p.add_argument("--scenario", default=None, help="scenario JSON (default built-in)")
    p.add_argument("--traces", default=None,
                   help="replay this existing trace CSV instead of generating")
    p.add_argument("--model", default=None, help="tree model to replay")
    p.add_argument("--threshold-hn", type=float, default=3.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="performance ratio vs packet interval")
    common(p)
    p.add_argument("--scenario", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--threshold-hn", type=float, default=3.0)
    p.add_argument("--intervals", default=",".join(str(v) for v in DEFAULT_INTERVALS))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability", help="warm-start chain over data fractions")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--fractions", default="0.5,0.75,1.0")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--init", choices=("random", "cart", "best_of_both"), default="cart")
    p.add_argument("--passes", type=int, default=20)
    p.add_argument("--raw-features", action="store_true")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("export", help="emit the IF/ELSE program and weight report")
    common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except RadioselError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
