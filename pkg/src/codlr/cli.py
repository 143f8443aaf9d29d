"""Command-line front end: prepare, synth, train, eval, diagnose, project.

Exit codes: 0 ok, 1 runtime error, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import data as kg
from .config import PRESETS, ConfigError, TrainConfig, load_config, parse_assignments, preset
from .evaluate import UnknownRelationError, diagnose, evaluate, project
from .train import Checkpoint, CheckpointError, TrainingDiverged, load_checkpoint, save_checkpoint, train


class UsageError(Exception):
    pass


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _load_store(path) -> kg.TripleStore:
    if not Path(path).exists():
        raise UsageError(f"data path {path} does not exist")
    return kg.load_data(path)


def _load_ckpt(path, store) -> Checkpoint:
    if not Path(path).is_file():
        raise UsageError(f"checkpoint {path} does not exist")
    return load_checkpoint(path, expected_digest=store.vocab.digest())


def cmd_prepare(args) -> int:
    for p in (args.train, args.valid, args.test):
        if not Path(p).is_file():
            raise UsageError(f"missing input file {p}")
    store = kg.load_splits(args.train, args.valid, args.test)
    if len(store.base["train"]) == 0:
        raise UsageError(f"training file {args.train} contains no triples")
    kg.save_cache(store, args.out)
    print(" ".join(f"{k}={v}" for k, v in store.stats().items()))
    return 0


def cmd_synth(args) -> int:
    spec = kg.SynthSpec(args.clusters, args.per_cluster, args.dim_hint, args.noise, args.seed, args.max_entities)
    try:
        out = kg.generate_synthetic(spec, args.out)
    except kg.SynthConfigError as e:
        raise UsageError(str(e)) from None
    print(f"wrote synthetic graph to {out}")
    return 0


def build_config(args) -> TrainConfig:
    cfg = preset(args.preset) if args.preset else TrainConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    cfg = parse_assignments(args.set or [], cfg)
    return cfg.validate()


def cmd_train(args) -> int:
    cfg = build_config(args)
    sys.stdout.write(cfg.to_text())
    store = _load_store(args.data)
    result = train(store, cfg, log_path=args.log, workers=args.workers)
    ckpt = Checkpoint(cfg, result.params, result.optimizer, result.epoch, store.vocab.digest())
    save_checkpoint(args.out_ckpt, ckpt)
    if result.history:
        last = result.history[-1]
        print(f"epoch={last.epoch} loss={last.loss:.6f}")
    print(f"saved {args.out_ckpt}")
    return 0


def cmd_eval(args) -> int:
    store = _load_store(args.data)
    ckpt = _load_ckpt(args.ckpt, store)
    if args.split not in kg.SPLITS:
        raise UsageError(f"unknown split {args.split}")
    metrics = evaluate(ckpt.params, ckpt.config, store, args.split, seed=args.seed, workers=args.workers)
    _write_csv(args.out, ["metric", "value"], [(k, repr(v)) for k, v in metrics.items()])
    for k, v in metrics.items():
        print(f"{k}={v:.6g}")
    return 0


def cmd_diagnose(args) -> int:
    store = _load_store(args.data)
    ckpt = _load_ckpt(args.ckpt, store)
    if not ckpt.config.codlr:
        print("error: diagnostics require codlr mode", file=sys.stderr)
        return 1
    report = diagnose(ckpt.params, ckpt.config, store, args.split)
    out = Path(args.out)
    _write_csv(out / "sol_curve.csv", ["epoch", "sol_mean"], [(ckpt.epoch, repr(report.sol_mean))])
    _write_csv(out / "dae.csv", ["relation", "div_entities", "div_dict", "dae"],
               [(r, repr(a), repr(b), repr(c)) for r, a, b, c in report.dae_rows])
    print(f"sol_mean={report.sol_mean:.6g} dae_mean={report.dae_mean:.6g}")
    return 0


def cmd_project(args) -> int:
    store = _load_store(args.data)
    ckpt = _load_ckpt(args.ckpt, store)
    if not ckpt.config.codlr:
        print("error: projection labels require codlr mode", file=sys.stderr)
        return 1
    rows = project(ckpt.params, ckpt.config, store, args.relation)
    _write_csv(args.out, ["entity", "x", "y", "label"], [(e, repr(x), repr(y), l) for e, x, y, l in rows])
    print(f"wrote {len(rows)} points to {args.out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="codlr", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="load TSV splits and write a binary KGD1 cache")
    s.add_argument("--train", required=True)
    s.add_argument("--valid", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out", required=True, help="cache file to write")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("synth", help="generate the synthetic multi-semantics graph")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--clusters", type=int, default=3)
    s.add_argument("--per-cluster", type=int, default=50)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dim-hint", type=int, default=32)
    s.add_argument("--max-entities", type=int, default=None)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train a model with kvsAll and Adam")
    s.add_argument("--data", required=True, help="KGD1 cache or directory with train/valid/test.txt")
    s.add_argument("--out-ckpt", required=True)
    s.add_argument("--config", help="key = value config file")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    s.add_argument("--log", help="epoch CSV log path")
    s.add_argument("--workers", type=int, default=1, help="gradient workers; results are bit-exact only at 1")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="filtered MR/MRR/Hits@k with random tie placement")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="test", choices=kg.SPLITS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="eval.csv path")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("diagnose", help="write sol_curve.csv and dae.csv for a checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="train", choices=kg.SPLITS, help="queries and heads to summarize")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("project", help="2-D PCA of a relation's entities labelled by lookup argmax")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--relation", required=True)
    s.add_argument("--out", required=True, help="CSV path (entity,x,y,label)")
    s.set_defaults(func=cmd_project)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, kg.TripleParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (CheckpointError, kg.CacheFormatError, UnknownRelationError, TrainingDiverged, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
