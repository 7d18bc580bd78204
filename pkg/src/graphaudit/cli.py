"""Command line entry point: ``graphaudit {run,train,attack,sweep,report}``.

Exit codes: 0 success, 1 configuration or missing-input error, 2 an attack failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import pipeline
from . import report as rpt
from .config import ConfigError, load_config

EXIT_OK, EXIT_CONFIG, EXIT_ATTACK = 0, 1, 2


# --- workers (module level so process pools can pickle them) ------------------------

def _run_worker(cfg, seed):
    return pipeline.run_seed(cfg, seed)


def _train_worker(cfg, seed):
    g = pipeline.build_graph(cfg, seed)
    target = pipeline.train_target(cfg, g, seed)
    pipeline.save_target(target, pipeline.seed_dir(cfg.out, seed))
    return target.summary


def _attack_worker(cfg, seed, config_path):
    directory = pipeline.seed_dir(cfg.out, seed)
    target = pipeline.load_target(directory, cfg.target.is_gnn, config_path)
    return pipeline.attack_seed(cfg, target, seed, directory)


def _map_seeds(fn, cfg, jobs, *extra):
    seeds = list(cfg.seeds)
    if jobs <= 1 or len(seeds) == 1:
        return [fn(cfg, s, *extra) for s in seeds]
    with ProcessPoolExecutor(max_workers=min(jobs, len(seeds))) as pool:
        return list(pool.map(fn, [cfg] * len(seeds), seeds, *[[e] * len(seeds) for e in extra]))


# --- helpers -------------------------------------------------------------------------

def _apply_common(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seeds"] = (args.seed,)
    if args.out is not None:
        changes["out"] = args.out
    return cfg.replace("experiment", **changes) if changes else cfg


def _write_runs(cfg, runs, filename):
    os.makedirs(cfg.out, exist_ok=True)
    report = rpt.build_report(cfg, runs)
    path = os.path.join(cfg.out, filename)
    rpt.write_report(report, path)
    return report, path


def _print_summary(report, path):
    for label, metrics in report["aggregate"].items():
        shown = [m for m in ("accuracy", "advantage", "auc", "average_precision", "f1_macro",
                             "train_acc", "test_acc") if m in metrics]
        text = ", ".join(f"{m}={metrics[m]['mean']:.4f}±{metrics[m]['std']:.4f}" for m in shown)
        print(f"{label}: {text}")
    for err in report["errors"]:
        print(f"error [{err['label']}, seed {err['seed']}]: {err['error']}", file=sys.stderr)
    print(f"report written to {path}")
    return EXIT_ATTACK if report["errors"] else EXIT_OK


# --- subcommands ---------------------------------------------------------------------

def cmd_run(cfg, args):
    runs = _map_seeds(_run_worker, cfg, args.jobs)
    for run in runs:
        seed_cfg = cfg.replace("experiment", seeds=(run["seed"],))
        rpt.write_report(rpt.build_report(seed_cfg, [run]),
                         os.path.join(pipeline.seed_dir(cfg.out, run["seed"]), "report.json"))
    with open(os.path.join(cfg.out, "config.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    return _print_summary(*_write_runs(cfg, runs, "report.json"))


def cmd_train(cfg, args):
    summaries = _map_seeds(_train_worker, cfg, args.jobs)
    for seed, summary in zip(cfg.seeds, summaries):
        acc = ", ".join(f"{k}={v:.4f}" for k, v in summary.items() if isinstance(v, float))
        print(f"seed {seed}: trained {summary['model']} ({acc}) -> {pipeline.seed_dir(cfg.out, seed)}")
    return EXIT_OK


def cmd_attack(cfg, args):
    name = args.attack
    if name == "membership":
        cfg = cfg.replace("experiment", attacks=("membership",))
        if args.mode:
            cfg = cfg.replace("membership", modes=tuple(args.mode))
    elif name == "reconstruct":
        name = "reconstruction"
        changes = {k: v for k, v in (("decoder", args.decoder), ("release", args.release),
                                     ("threshold_policy", args.threshold_policy)) if v is not None}
        cfg = cfg.replace("experiment", attacks=("reconstruction",))
        if changes:
            cfg = cfg.replace("reconstruction", **changes)
    else:
        cfg = cfg.replace("experiment", attacks=("attribute",))
        if args.classifier:
            cfg = cfg.replace("attribute", classifier=args.classifier)
    runs = _map_seeds(_attack_worker, cfg, args.jobs, args.config)
    suffix = ""
    if name == "reconstruction":
        suffix = f"_{cfg.reconstruction.decoder}"
    elif name == "membership":
        suffix = "_" + "_".join(cfg.membership.modes)
    return _print_summary(*_write_runs(cfg, runs, f"attack_{name}{suffix}.json"))


def _sweep_configs(cfg, kind, values):
    if kind == "layers":
        if not cfg.target.is_gnn:
            raise ConfigError("target.model: a layer sweep needs a gcn or sage target")
        out = []
        for v in values:
            depth = int(v)
            if depth < 2:
                raise ConfigError(f"sweep layers: depth {depth} is below 2")
            c = cfg.replace("target", num_layers=depth, embedding_layer=min(cfg.target.embedding_layer, depth - 1))
            out.append((depth, c.replace("experiment", out=os.path.join(cfg.out, "sweep_layers", f"L{depth}"))))
        return out
    fractions = [float(v) for v in values]
    if any(not 0.0 < f < 1.0 for f in fractions):
        raise ConfigError("sweep aux: fractions must lie in (0, 1)")
    attacks = tuple(a for a in cfg.experiment.attacks if a in ("reconstruction", "attribute"))
    if not attacks:
        raise ConfigError("experiment.attacks: an aux sweep needs reconstruction or attribute")
    top = max(fractions)
    out = []
    for f in fractions:
        c = cfg.replace("experiment", attacks=attacks, out=os.path.join(cfg.out, "sweep_aux", f"aux_{f:g}"))
        for section in attacks:
            sec = getattr(c, section)
            # a fixed target set across the sweep: nested splits cut the target from the same end
            c = c.replace(section, aux_fraction=f, target_fraction=min(sec.target_fraction, 1.0 - top))
        out.append((f, c))
    return out


def cmd_sweep(cfg, args):
    rows, status = [], EXIT_OK
    for value, c in _sweep_configs(cfg, args.kind, args.values):
        runs = _map_seeds(_run_worker, c, args.jobs)
        report, path = _write_runs(c, runs, "report.json")
        print(f"== {args.kind} = {value}")
        status = max(status, _print_summary(report, path))
        rows.extend(rpt.aggregate_rows(report["runs"], {"sweep": args.kind, "value": value}))
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, f"sweep_{args.kind}.csv")
    rpt.write_csv(rows, path, ["sweep", "value"] + rpt.AGGREGATE_COLUMNS)
    print(f"sweep table written to {path}")
    return status


def cmd_report(args):
    missing = [p for p in args.reports if not os.path.exists(p)]
    if missing:
        print(f"error: missing report {missing[0]}; produce it with `graphaudit run --config CONFIG`",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        runs = rpt.merge_runs([rpt.read_report(p) for p in args.reports])
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rpt.write_csv(rpt.aggregate_rows(runs), args.out, rpt.AGGREGATE_COLUMNS)
    print(f"aggregate table ({len(runs)} runs) written to {args.out}")
    if args.per_seed:
        rpt.write_csv(rpt.per_seed_rows(runs), args.per_seed, ["label", "metric", "seed", "value"])
        print(f"per-seed table written to {args.per_seed}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="INI experiment config")
    common.add_argument("--seed", type=int, help="run a single master seed instead of experiment.seeds")
    common.add_argument("--jobs", type=int, default=1, help="seeds to run in parallel (default 1)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides experiment.out)")

    parser = argparse.ArgumentParser(prog="graphaudit", description="Privacy leakage audits of graph models.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="train targets and run every configured attack")
    sub.add_parser("train", parents=[common], help="train targets and persist model, graph and embeddings")

    attack = sub.add_parser("attack", help="run one attack against persisted targets")
    kinds = attack.add_subparsers(dest="attack", required=True)
    mem = kinds.add_parser("membership", parents=[common], help="membership inference")
    mem.add_argument("--mode", nargs="+", choices=["confidence", "shadow", "whitebox"])
    recon = kinds.add_parser("reconstruct", parents=[common], help="graph reconstruction and link inference")
    recon.add_argument("--decoder", choices=["inner_product", "bilinear"])
    recon.add_argument("--release", choices=["encoder", "target"])
    recon.add_argument("--threshold-policy", choices=["fixed", "density"])
    attr = kinds.add_parser("attribute", parents=[common], help="sensitive attribute inference")
    attr.add_argument("--classifier", choices=["mlp", "logreg"])

    sweep = sub.add_parser("sweep", help="repeat the run over a list of settings")
    sweep_kinds = sweep.add_subparsers(dest="kind", required=True)
    for kind, help_text in (("layers", "GNN depths"), ("aux", "adversary aux fractions")):
        p = sweep_kinds.add_parser(kind, parents=[common], help=help_text)
        p.add_argument("values", nargs="+")

    rep = sub.add_parser("report", help="merge report JSON files into CSV tables")
    rep.add_argument("reports", nargs="+", metavar="REPORT")
    rep.add_argument("--out", required=True, metavar="CSV", help="aggregate table (label, metric, n, mean, std)")
    rep.add_argument("--per-seed", metavar="CSV", help="optional long table with one row per seed")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return cmd_report(args)
    try:
        cfg = _apply_common(load_config(args.config), args)
        handler = {"run": cmd_run, "train": cmd_train, "attack": cmd_attack, "sweep": cmd_sweep}[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except pipeline.MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
