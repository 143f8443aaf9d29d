"""Ablation variants on a dataset directory or cache.

Variants: full model, fine-only loss (lambda = 0), central-semantics context
and entity-only context, plus the plain base scorer for reference.
"""

import argparse
import csv

from codlr.config import TrainConfig, parse_assignments, preset
from codlr.data import load_data
from codlr.evaluate import evaluate
from codlr.train import train

VARIANTS = {
    "plain": {"mode": "plain"},
    "CoDLR": {},
    "FSCoDLR": {"lam": 0.0},
    "CSDLR": {"composition": "central_only"},
    "REDLR": {"composition": "entity_only"},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True)
    ap.add_argument("--preset", help="start from a named preset")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", default="ablation.csv")
    ap.add_argument("--variants", nargs="*", default=list(VARIANTS))
    args = ap.parse_args()

    base = preset(args.preset) if args.preset else TrainConfig(dim=32, dict_size=4, learning_rate=0.01,
                                                               batch_size=64, epochs=100)
    base = parse_assignments(args.set, base).validate()
    store = load_data(args.data)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["variant", "MR", "MRR", "H@1", "H@3", "H@10"])
        for name in args.variants:
            cfg = base.replace(**VARIANTS[name]).validate()
            res = train(store, cfg)
            m = evaluate(res.params, cfg, store, "test")
            w.writerow([name] + [repr(m[k]) for k in ("MR", "MRR", "H@1", "H@3", "H@10")])
            f.flush()
            print(f"{name:8s} MRR={m['MRR']:.4f} H@1={m['H@1']:.4f} H@10={m['H@10']:.4f}")


if __name__ == "__main__":
    main()
