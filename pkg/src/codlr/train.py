"""kvsAll training with the dual loss, Adam, epoch logging and checkpoints."""

from __future__ import annotations

import csv
import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import TrainConfig, parse_text
from .data import TripleStore
from .evaluate import evaluate
from .model import Params, init_params, loss_and_grads, multi_hot

log = logging.getLogger(__name__)

CKPT_MAGIC = b"CKP1"
CKPT_VERSION = 1
_CLAMP = 1e-7


def bce(score: float, label: float) -> float:
    s = min(max(float(score), _CLAMP), 1.0 - _CLAMP)
    return -(label * math.log(s) + (1.0 - label) * math.log(1.0 - s))


def combined_loss(loss_f: float, loss_c: float, lam: float) -> float:
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam}")
    return loss_f + lam * loss_c


class Adam:
    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: Params, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            if k not in grads:
                continue
            g = grads[k].astype(p.dtype)
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= (self.lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class EpochStats:
    epoch: int
    loss: float
    loss_f: float
    loss_c: float
    sol_mean: float | None
    valid_mrr: float | None = None
    extra: dict = field(default_factory=dict)


def _batch_grads(params, config, heads, rels, targets, workers, pool):
    if workers <= 1 or pool is None or len(heads) < 2 * workers:
        return loss_and_grads(params, config, heads, rels, targets)
    norm = targets.size
    splits = np.array_split(np.arange(len(heads)), workers)
    results = list(pool.map(lambda ix: loss_and_grads(params, config, heads[ix], rels[ix], targets[ix], norm), splits))
    parts = results[0][0]
    grads = {k: sum(r[1][k] for r in results) for k in results[0][1]}
    parts.total = sum(r[0].total for r in results)
    parts.fine = sum(r[0].fine for r in results)
    parts.central = sum(r[0].central for r in results)
    if parts.sol is not None:
        parts.sol = np.concatenate([r[0].sol for r in results])
    return parts, grads


def train_epoch(
    store: TripleStore,
    params: Params,
    optimizer: Adam,
    config: TrainConfig,
    epoch: int,
    workers: int = 1,
) -> EpochStats:
    """One pass over every distinct training (head, rel) pair, shuffled by ``(seed, epoch)``.

    Bit-deterministic with ``workers == 1``.
    """
    pairs = store.training_pairs()
    order = np.random.default_rng([config.seed, epoch]).permutation(len(pairs))
    pairs = pairs[order]
    n = len(pairs)
    tot = {"loss": 0.0, "loss_f": 0.0, "loss_c": 0.0, "sol": 0.0}
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for b, lo in enumerate(range(0, n, config.batch_size)):
            batch = pairs[lo : lo + config.batch_size]
            heads, rels = batch[:, 0], batch[:, 1]
            targets = multi_hot(store, heads, rels, config.label_smoothing)
            parts, grads = _batch_grads(params, config, heads, rels, targets, workers, pool)
            if not np.isfinite(parts.total):
                h, r = (int(x) for x in batch[0])
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {b} (first pair head={h}, rel={r})"
                )
            w = len(batch) / n
            tot["loss"] += parts.total * w
            tot["loss_f"] += parts.fine * w
            tot["loss_c"] += parts.central * w
            if parts.sol is not None:
                tot["sol"] += float(parts.sol.sum()) / n
            optimizer.step(params, grads)
    finally:
        if pool is not None:
            pool.shutdown()
    return EpochStats(epoch, tot["loss"], tot["loss_f"], tot["loss_c"], tot["sol"] if config.codlr else None)


LOG_HEADER = ["epoch", "loss", "loss_f", "loss_c", "sol_mean", "valid_mrr"]


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_log_row(writer, s: EpochStats) -> None:
    writer.writerow([s.epoch, _fmt(s.loss), _fmt(s.loss_f), _fmt(s.loss_c), _fmt(s.sol_mean), _fmt(s.valid_mrr)])


@dataclass
class TrainResult:
    params: Params
    optimizer: Adam
    history: list[EpochStats]
    epoch: int


def train(
    store: TripleStore,
    config: TrainConfig,
    params: Params | None = None,
    optimizer: Adam | None = None,
    start_epoch: int = 0,
    epochs: int | None = None,
    log_path=None,
    on_epoch: Callable[[EpochStats, Params], None] | None = None,
    workers: int = 1,
) -> TrainResult:
    """Train for ``epochs`` (default ``config.epochs``); no early stopping.

    With ``config.eval_every > 0`` the filtered validation MRR is logged every
    that many epochs. ``on_epoch`` sees the stats and live parameters.
    """
    config.validate()
    if params is None:
        params = init_params(config, store.num_entities, store.num_relations)
    if optimizer is None:
        optimizer = Adam(config.learning_rate)
    epochs = config.epochs if epochs is None else epochs
    history = []
    fh = open(log_path, "w", newline="") if log_path else None
    try:
        writer = csv.writer(fh, lineterminator="\n") if fh else None
        if writer:
            writer.writerow(LOG_HEADER)
        for e in range(start_epoch + 1, start_epoch + epochs + 1):
            stats = train_epoch(store, params, optimizer, config, e, workers)
            if config.eval_every and e % config.eval_every == 0 and len(store.splits["valid"]):
                stats.valid_mrr = evaluate(params, config, store, "valid", seed=config.seed, workers=workers)["MRR"]
            if on_epoch:
                on_epoch(stats, params)
            history.append(stats)
            log.info("epoch %d loss %.6f sol %s mrr %s", e, stats.loss, stats.sol_mean, stats.valid_mrr)
            if writer:
                write_log_row(writer, stats)
                fh.flush()
    finally:
        if fh:
            fh.close()
    return TrainResult(params, optimizer, history, start_epoch + epochs)


# --- checkpoints --------------------------------------------------------------

class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: TrainConfig
    params: Params
    optimizer: Adam
    epoch: int
    vocab_digest: str

    def check_vocab(self, digest: str) -> None:
        if digest != self.vocab_digest:
            raise CheckpointError(
                f"checkpoint was trained on a different vocabulary (digest {self.vocab_digest[:12]} != {digest[:12]})"
            )


def _tensor_record(name: str, arr: np.ndarray) -> bytes:
    raw = name.encode("utf-8")
    a = np.ascontiguousarray(arr, dtype="<f4")
    return b"".join([
        struct.pack("<I", len(raw)), raw,
        struct.pack(f"<I{a.ndim}I", a.ndim, *a.shape),
        a.tobytes(),
    ])


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    meta = (
        ckpt.config.to_text()
        + f"ckpt.epoch = {ckpt.epoch}\n"
        + f"ckpt.vocab_digest = {ckpt.vocab_digest}\n"
        + f"ckpt.adam_step = {ckpt.optimizer.t}\n"
    ).encode("utf-8")
    tensors = [(k, v) for k, v in sorted(ckpt.params.items())]
    tensors += [(f"adam.m.{k}", v) for k, v in sorted(ckpt.optimizer.m.items())]
    tensors += [(f"adam.v.{k}", v) for k, v in sorted(ckpt.optimizer.v.items())]
    parts = [CKPT_MAGIC, struct.pack("<II", CKPT_VERSION, len(meta)), meta, struct.pack("<I", len(tensors))]
    parts += [_tensor_record(k, v) for k, v in tensors]
    with open(path, "wb") as f:
        f.write(b"".join(parts))


def load_checkpoint(path, expected_digest: str | None = None) -> Checkpoint:
    with open(path, "rb") as f:
        buf = f.read()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise CheckpointError(f"{path}: truncated checkpoint")
        out = buf[pos : pos + n]
        pos += n
        return out

    def u32(count=1):
        vals = struct.unpack(f"<{count}I", take(4 * count))
        return vals[0] if count == 1 else vals

    if take(4) != CKPT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version = u32()
    if version != CKPT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {CKPT_VERSION})")
    text = take(u32()).decode("utf-8")
    meta, cfg_lines = {}, []
    for line in text.splitlines():
        if line.startswith("ckpt."):
            k, v = (x.strip() for x in line.split("=", 1))
            meta[k[5:]] = v
        else:
            cfg_lines.append(line)
    config = parse_text("\n".join(cfg_lines))
    tensors = {}
    for _ in range(u32()):
        name = take(u32()).decode("utf-8")
        rank = u32()
        shape = tuple(np.atleast_1d(u32(rank))) if rank else ()
        count = int(np.prod(shape)) if shape else 1
        tensors[name] = np.frombuffer(take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
    if pos != len(buf):
        raise CheckpointError(f"{path}: {len(buf) - pos} trailing bytes")
    try:
        epoch, digest, step = int(meta["epoch"]), meta["vocab_digest"], int(meta["adam_step"])
    except KeyError as e:
        raise CheckpointError(f"{path}: missing metadata {e}") from None
    opt = Adam(config.learning_rate)
    opt.t = step
    params = {}
    for k, v in tensors.items():
        if k.startswith("adam.m."):
            opt.m[k[7:]] = v
        elif k.startswith("adam.v."):
            opt.v[k[7:]] = v
        else:
            params[k] = v
    ckpt = Checkpoint(config, params, opt, epoch, digest)
    if expected_digest is not None:
        ckpt.check_vocab(expected_digest)
    return ckpt
