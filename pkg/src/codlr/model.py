"""Model parameters and the batched dual-score forward/backward pass.

Parameters live in a plain ``dict[str, np.ndarray]`` of float32 arrays:

* ``entity``       (|E|, d)
* ``relation``     (|R|, d)              plain mode
* ``dictionary``   (|R|, n, d)           codlr mode
* ``lookup_weight`` (d_c, n) or (|R|, d_c, n)
* ``lookup_bias``   (n,) or (|R|, n)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lookup as lk
from .config import TrainConfig
from .metrics import sol
from .ndmath import sigmoid
from .scorers import tail_logits, tail_logits_backward

Params = dict[str, np.ndarray]


def init_params(config: TrainConfig, num_entities: int, num_relations: int, seed: int | None = None) -> Params:
    rng = np.random.default_rng(config.seed if seed is None else seed)
    d = config.dim
    bound = 0.5 / np.sqrt(d)
    params = {"entity": rng.uniform(-bound, bound, (num_entities, d))}
    if not config.codlr:
        params["relation"] = rng.uniform(-bound, bound, (num_relations, d))
    else:
        n = config.dict_size
        dc = lk.context_dim(config.composition, d)
        params["dictionary"] = rng.uniform(-bound, bound, (num_relations, n, d))
        glorot = np.sqrt(6.0 / (dc + n))
        wshape = (num_relations, dc, n) if config.per_relation_mlp else (dc, n)
        params["lookup_weight"] = rng.uniform(-glorot, glorot, wshape)
        params["lookup_bias"] = np.zeros(wshape[:1] + (n,) if config.per_relation_mlp else (n,))
    return {k: v.astype(np.float32) for k, v in params.items()}


@dataclass
class BatchScores:
    logits_f: np.ndarray  # (B, |E|); plain mode: the only score
    logits_c: np.ndarray | None  # (B, |E|) from central semantics, codlr only
    trace: lk.LookupTrace | None
    heads: np.ndarray  # (B, d) float64 head embeddings
    semantics_f: np.ndarray  # (B, d)

    @property
    def scores_f(self) -> np.ndarray:
        return sigmoid(self.logits_f)

    @property
    def scores_c(self) -> np.ndarray:
        if self.logits_c is None:
            raise ValueError("central scores exist only in codlr mode")
        return sigmoid(self.logits_c)


def lookup_trace(params: Params, config: TrainConfig, head_ids, rel_ids) -> lk.LookupTrace:
    if "dictionary" not in params:
        raise ValueError("lookup requires codlr-mode parameters")
    rel_ids = np.asarray(rel_ids)
    h = params["entity"][np.asarray(head_ids)].astype(np.float64)
    if params["lookup_weight"].ndim == 3:
        w, b = params["lookup_weight"][rel_ids], params["lookup_bias"][rel_ids]
    else:
        w, b = params["lookup_weight"], params["lookup_bias"]
    return lk.forward(w, b, params["dictionary"][rel_ids], h, config.composition, config.activation)


def dual_scores(params: Params, config: TrainConfig, head_ids, rel_ids, central: bool = True) -> BatchScores:
    """Score each (head, rel) row against every entity.

    In codlr mode returns both the fine-grained (used for prediction) and the
    central logits, computed from one lookup trace.
    """
    head_ids = np.atleast_1d(np.asarray(head_ids))
    rel_ids = np.atleast_1d(np.asarray(rel_ids))
    ents = params["entity"].astype(np.float64)
    h = ents[head_ids]
    if "dictionary" not in params:
        s = params["relation"][rel_ids].astype(np.float64)
        return BatchScores(tail_logits(config.scorer, h, s, ents), None, None, h, s)
    trace = lookup_trace(params, config, head_ids, rel_ids)
    logits_f = tail_logits(config.scorer, h, trace.fine, ents)
    logits_c = tail_logits(config.scorer, h, trace.center, ents) if central else None
    return BatchScores(logits_f, logits_c, trace, h, trace.fine)


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Elementwise -[T log s + (1-T) log(1-s)] with s = sigmoid(logits), overflow-free."""
    return np.logaddexp(0.0, logits) - targets * logits


def batch_loss(params: Params, config: TrainConfig, head_ids, rel_ids, targets: np.ndarray) -> float:
    """Forward-only ``L_f + lambda * L_c`` (mean over label cells)."""
    out = dual_scores(params, config, head_ids, rel_ids, central=config.codlr)
    loss = bce_with_logits(out.logits_f, targets).sum()
    if config.codlr:
        loss += config.lam * bce_with_logits(out.logits_c, targets).sum()
    return float(loss) / targets.size


@dataclass
class LossParts:
    total: float
    fine: float
    central: float
    sol: np.ndarray | None  # per-row sparseness of the lookup (codlr only)


def loss_and_grads(
    params: Params,
    config: TrainConfig,
    head_ids,
    rel_ids,
    targets: np.ndarray,
    norm: float | None = None,
) -> tuple[LossParts, dict[str, np.ndarray]]:
    """Dual loss ``L_f + lambda * L_c`` (mean BCE over ``norm`` label cells) and its gradients.

    ``norm`` defaults to ``targets.size``; pass the full-batch size when the
    batch is split across workers so the partial gradients sum to the whole.
    """
    head_ids = np.asarray(head_ids)
    rel_ids = np.asarray(rel_ids)
    norm = float(targets.size if norm is None else norm)
    out = dual_scores(params, config, head_ids, rel_ids, central=config.codlr)
    ents = params["entity"].astype(np.float64)
    kind = config.scorer

    loss_f = float(bce_with_logits(out.logits_f, targets).sum() / norm)
    g_logit_f = (sigmoid(out.logits_f) - targets) / norm
    g_h, g_sf, g_ents = tail_logits_backward(kind, out.heads, out.semantics_f, ents, out.logits_f, g_logit_f)
    grads: dict[str, np.ndarray] = {}

    if not config.codlr:
        g_rel = np.zeros(params["relation"].shape)
        np.add.at(g_rel, rel_ids, g_sf)
        grads["relation"] = g_rel
        loss_c = 0.0
        sol_rows = None
    else:
        trace = out.trace
        loss_c = float(bce_with_logits(out.logits_c, targets).sum() / norm)
        g_logit_c = config.lam * (sigmoid(out.logits_c) - targets) / norm
        g_h_c, g_center, g_ents_c = tail_logits_backward(
            kind, out.heads, trace.center, ents, out.logits_c, g_logit_c
        )
        g_h = g_h + g_h_c
        g_ents = g_ents + g_ents_c
        lg = lk.backward(trace, _weight_rows(params, rel_ids), g_sf, g_center)
        g_h = g_h + lg.entity
        g_dict = np.zeros(params["dictionary"].shape)
        np.add.at(g_dict, rel_ids, lg.dictionary)
        grads["dictionary"] = g_dict
        if params["lookup_weight"].ndim == 3:
            g_w = np.zeros(params["lookup_weight"].shape)
            g_b = np.zeros(params["lookup_bias"].shape)
            np.add.at(g_w, rel_ids, lg.weight)
            np.add.at(g_b, rel_ids, lg.bias)
        else:
            g_w, g_b = lg.weight, lg.bias
        grads["lookup_weight"] = g_w
        grads["lookup_bias"] = g_b
        sol_rows = sol(trace.lookup)

    np.add.at(g_ents, head_ids, g_h)
    grads["entity"] = g_ents
    parts = LossParts(loss_f + config.lam * loss_c, loss_f, loss_c, sol_rows)
    return parts, grads


def _weight_rows(params: Params, rel_ids) -> np.ndarray:
    w = params["lookup_weight"]
    return w[rel_ids] if w.ndim == 3 else w


def multi_hot(store, head_ids, rel_ids, smoothing: float = 0.0) -> np.ndarray:
    """kvsAll label rows; with smoothing, T = (1 - eps) * T + eps / |E|."""
    ne = store.num_entities
    t = np.zeros((len(head_ids), ne))
    for i, (h, r) in enumerate(zip(np.asarray(head_ids).tolist(), np.asarray(rel_ids).tolist())):
        tails = store.kvsall_index.get((h, r))
        if tails:
            t[i, list(tails)] = 1.0
    if smoothing:
        t = (1.0 - smoothing) * t + smoothing / ne
    return t
