"""Command-line entry point and run-directory persistence.

Subcommands:

* ``run``            -- execute one experiment from a config file;
* ``sweep``          -- repeat a run across values of one config key;
* ``verify-theorem`` -- enumerate random discrete worlds and check the
                        correction-threshold implication exhaustively;
* ``relabel``        -- export a corrected dataset from saved checkpoints;
* ``retrain``        -- train a fresh pair from scratch on a relabeled CSV.

A run directory contains manifest.json, metrics.csv, final checkpoints
net1.ckpt and net2.ckpt, and optional dumps under dumps/.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from . import metrics as metrics_mod
from . import trainer as trainer_mod
from .config import ConfigError, RunConfig, load_config
from .data import save_csv
from .metrics import DumpWriter, MetricsSink
from .net import load_checkpoint, save_checkpoint
from .reco import verify_many

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = 1


def _manifest_dict(cfg: RunConfig, result: trainer_mod.RunResult, wall_clock):
    return {
        "artifact": {"name": "noisylab", "version": __version__,
                     "manifest_version": ARTIFACT_VERSION},
        "config": cfg.to_flat(),
        "summary": {
            "best_acc": result.best_acc,
            "last10_mean_acc": result.last10_mean_acc,
            "final_auc": result.final_auc,
        },
        "reco_events": [
            {
                "epoch": epoch,
                "tau_ps": event.tau_ps,
                "size": event.size,
                "precision": event.precision,
            }
            for epoch, event in result.reco_events
        ],
        "wall_clock": wall_clock,
    }


def execute_run(cfg: RunConfig, out_dir=None, datasets=None) -> trainer_mod.RunResult:
    """Run an experiment and persist manifest, metrics, and checkpoints."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_writer = None
    if cfg.dump_losses or cfg.dump_division or cfg.checkpoint_every > 0:
        (out / "dumps").mkdir(exist_ok=True)
        dump_writer = DumpWriter(out / "dumps", cfg.dump_losses, cfg.dump_division)

    def checkpoint_hook(epoch, nets):
        if cfg.checkpoint_every > 0 and epoch % cfg.checkpoint_every == 0:
            for k, net in enumerate(nets):
                save_checkpoint(net, out / "dumps" / f"net{k + 1}_epoch{epoch}.ckpt")

    started = time.time()
    with MetricsSink(out / "metrics.csv") as sink:
        result = trainer_mod.run(
            cfg,
            record_hook=sink.emit,
            dump_writer=dump_writer,
            epoch_end_hook=checkpoint_hook,
            datasets=datasets,
        )
    wall_clock = None
    if cfg.record_timing:
        wall_clock = {
            "started_unix": started,
            "elapsed_seconds": time.time() - started,
        }
    for k, net in enumerate(result.nets):
        save_checkpoint(net, out / f"net{k + 1}.ckpt")
    manifest = _manifest_dict(cfg, result, wall_clock)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result


def _load_config_or_exit(path, seed=None, out=None) -> RunConfig:
    try:
        cfg = load_config(path)
        if seed is not None:
            cfg = cfg.replace_key("run.seed", str(seed))
        if out is not None:
            cfg = cfg.replace_key("run.out", str(out))
        return cfg
    except ConfigError as exc:
        print("config error(s):", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        raise SystemExit(2) from None
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        raise SystemExit(2) from None


def _cmd_run(args) -> int:
    cfg = _load_config_or_exit(args.config, args.seed, args.out)
    result = execute_run(cfg)
    print(
        f"run complete: best_acc={result.best_acc:.4f} "
        f"last10_mean={result.last10_mean_acc:.4f} "
        f"final_auc={'NA' if result.final_auc is None else f'{result.final_auc:.4f}'}"
    )
    return 0


def _sweep_one(payload):
    cfg_flat, key, value, out_dir = payload
    from .config import build_config, _to_text  # local import for worker processes

    base = build_config({k: _to_text(v) for k, v in cfg_flat.items()})
    cfg = base.replace_key(key, value)
    result = execute_run(cfg, out_dir=out_dir)
    return value, result.best_acc


def _cmd_sweep(args) -> int:
    cfg = _load_config_or_exit(args.config, args.seed, None)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        print("sweep needs at least one value", file=sys.stderr)
        return 2
    base_out = Path(args.out if args.out else cfg.out)
    jobs = []
    for value in values:
        try:
            cfg.replace_key(args.axis, value)
        except ConfigError as exc:
            print(f"invalid sweep value {value!r}: {exc}", file=sys.stderr)
            return 2
        run_dir = base_out / f"{args.axis}={value}"
        jobs.append((cfg.to_flat(), args.axis, value, str(run_dir)))
    if cfg.sweep_parallel:
        with ProcessPoolExecutor() as pool:
            outcomes = list(pool.map(_sweep_one, jobs))
    else:
        outcomes = [_sweep_one(job) for job in jobs]
    for value, best in outcomes:
        print(f"{args.axis}={value}: best_acc={best:.4f}")
    return 0


def _cmd_verify_theorem(args) -> int:
    summary = verify_many(
        args.worlds, args.seed, max_classes=args.max_classes,
        max_inputs=args.max_inputs,
    )
    print(
        f"worlds checked: {summary.worlds}\n"
        f"implication checks: {summary.checks} "
        f"(premise satisfied {summary.premise_hits} times)\n"
        f"counterexamples: {len(summary.counterexamples)}"
    )
    for index, pair in summary.counterexamples:
        print(f"  world {index}: input {pair[0]}, class {pair[1]}")
    return 0 if not summary.counterexamples else 1


def _load_pair(run_dir: Path):
    return (
        load_checkpoint(run_dir / "net1.ckpt"),
        load_checkpoint(run_dir / "net2.ckpt"),
    )


def _cmd_relabel(args) -> int:
    cfg = _load_config_or_exit(args.config, args.seed, None)
    tau_ps = cfg.reco_tau_ps if args.tau_ps is None else args.tau_ps
    net_a, net_b = _load_pair(Path(args.checkpoints))
    train_ds, _ = trainer_mod.build_datasets(cfg)
    exported, stats = metrics_mod.relabel_export(net_a, net_b, train_ds, tau_ps)
    save_csv(exported, args.out, channel="observed")
    precision = "NA" if stats.precision is None else f"{stats.precision:.4f}"
    print(f"relabeled {stats.size} of {len(exported)} samples "
          f"(tau_ps={tau_ps:g}, precision={precision}) -> {args.out}")
    return 0


def _cmd_retrain(args) -> int:
    base = _load_config_or_exit(args.config, args.seed, args.out)
    # The relabeled file becomes the training set; its labels are taken at
    # face value and no extra noise is injected on top.
    overrides = {
        "dataset.kind": "csv",
        "dataset.path": args.data,
        "dataset.num_classes": str(args.num_classes),
        "noise.family": "symmetric",
        "noise.eta": "0.0",
        "noise.mapping": "",
        "train.method": "plain",
    }
    if args.test_data:
        overrides["dataset.test_path"] = args.test_data
    cfg = base.replace_keys(overrides)
    datasets = None
    if not args.test_data:
        # Fall back to the blob test split of the original config.
        if base.dataset_kind != "blobs":
            print("retrain needs --test-data when the config is not blobs",
                  file=sys.stderr)
            return 2
        _, test_ds = trainer_mod.build_datasets(base)
        train_ds, _ = trainer_mod.build_datasets(cfg)
        datasets = (train_ds, test_ds)
    result = execute_run(cfg, datasets=datasets)
    print(
        f"retrain complete: best_acc={result.best_acc:.4f} "
        f"last10_mean={result.last10_mean_acc:.4f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisylab",
        description="Desk-scale laboratory for learning with noisy labels.",
    )
    parser.add_argument("--verbose", action="store_true", help="per-epoch logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one experiment")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None, help="override run.seed")
    run_p.add_argument("--out", default=None, help="override run.out")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run once per value of a config key")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True, help="flat config key to vary")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--out", default=None, help="parent directory for run dirs")
    sweep_p.set_defaults(func=_cmd_sweep)

    verify_p = sub.add_parser(
        "verify-theorem",
        help="exhaustively check the correction-threshold implication",
    )
    verify_p.add_argument("--worlds", type=int, default=1000)
    verify_p.add_argument("--seed", type=int, default=1)
    verify_p.add_argument("--max-classes", type=int, default=5)
    verify_p.add_argument("--max-inputs", type=int, default=6)
    verify_p.set_defaults(func=_cmd_verify_theorem)

    relabel_p = sub.add_parser("relabel", help="export corrected labels as CSV")
    relabel_p.add_argument("--config", required=True)
    relabel_p.add_argument("--checkpoints", required=True,
                           help="run directory holding net1.ckpt and net2.ckpt")
    relabel_p.add_argument("--tau-ps", type=float, default=None)
    relabel_p.add_argument("--seed", type=int, default=None)
    relabel_p.add_argument("--out", required=True, help="output CSV path")
    relabel_p.set_defaults(func=_cmd_relabel)

    retrain_p = sub.add_parser("retrain", help="train from scratch on a relabeled CSV")
    retrain_p.add_argument("--config", required=True)
    retrain_p.add_argument("--data", required=True, help="relabeled CSV path")
    retrain_p.add_argument("--num-classes", type=int, required=True)
    retrain_p.add_argument("--test-data", default=None, help="held-out CSV path")
    retrain_p.add_argument("--seed", type=int, default=None)
    retrain_p.add_argument("--out", default=None)
    retrain_p.set_defaults(func=_cmd_retrain)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
