"""Full-scale benchmark run from a preset, with periodic validation MRR.

Expect hours of CPU time at the preset sizes. Example:

    python scripts/long_run.py --data data/FB15k-237 --preset codlr-transe-fb15k237 --out runs/fb
"""

import argparse
import csv
import logging
from pathlib import Path

from codlr.config import PRESETS, parse_assignments, preset
from codlr.data import load_data
from codlr.evaluate import diagnose, evaluate
from codlr.train import Checkpoint, save_checkpoint, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True, help="directory with train/valid/test.txt or a KGD1 cache")
    ap.add_argument("--preset", required=True, choices=sorted(PRESETS))
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", required=True)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = parse_assignments(args.set, preset(args.preset)).validate()
    if not cfg.eval_every:
        cfg = cfg.replace(eval_every=25)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store = load_data(args.data)
    print(" ".join(f"{k}={v}" for k, v in store.stats().items()))
    res = train(store, cfg, log_path=out / "train_log.csv", workers=args.workers)
    save_checkpoint(out / "model.ckpt", Checkpoint(cfg, res.params, res.optimizer, res.epoch, store.vocab.digest()))
    m = evaluate(res.params, cfg, store, "test", workers=args.workers)
    rep = diagnose(res.params, cfg, store)
    with open(out / "eval.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerows([(k, repr(v)) for k, v in m.items()] + [("sol_mean", repr(rep.sol_mean)),
                                                              ("dae_mean", repr(rep.dae_mean))])
    print(" ".join(f"{k}={v:.4f}" for k, v in m.items()))


if __name__ == "__main__":
    main()
