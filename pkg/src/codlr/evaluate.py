"""Model-level evaluation: filtered link prediction, SOL/DAE diagnostics, PCA case-study export."""

from __future__ import annotations

import difflib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import TrainConfig
from .data import TripleStore
from .metrics import EvalReport, aggregate, dae, rank_gold, sol
from .model import Params, dual_scores, lookup_trace
from .ndmath import pca2


def _chunks(n: int, size: int):
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def query_ranks(
    params: Params,
    config: TrainConfig,
    store: TripleStore,
    split: str = "test",
    seed: int = 0,
    batch_size: int = 256,
    workers: int = 1,
) -> np.ndarray:
    """Filtered rank of the gold tail for every triple of ``split`` (reciprocals included).

    Query i draws its tie-breaking from ``default_rng([seed, i])`` so the result
    does not depend on ``workers``.
    """
    triples = store.splits[split]

    def run(span):
        lo, hi = span
        block = triples[lo:hi]
        logits = dual_scores(params, config, block[:, 0], block[:, 1], central=False).logits_f
        out = []
        for j, (h, r, t) in enumerate(block.tolist()):
            rng = np.random.default_rng([seed, lo + j])
            out.append(rank_gold(logits[j], t, store.filter_candidates(h, r, t), rng))
        return out

    spans = _chunks(len(triples), batch_size)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, spans))
    else:
        parts = [run(s) for s in spans]
    return np.array([r for p in parts for r in p], dtype=np.int64)


def evaluate(params, config, store, split="test", seed=0, batch_size=256, workers=1) -> dict[str, float]:
    return aggregate(query_ranks(params, config, store, split, seed, batch_size, workers))


def lookup_vectors(params: Params, config: TrainConfig, pairs: np.ndarray, batch_size: int = 1024) -> np.ndarray:
    out = [lookup_trace(params, config, pairs[lo:hi, 0], pairs[lo:hi, 1]).lookup
           for lo, hi in _chunks(len(pairs), batch_size)]
    return np.concatenate(out) if out else np.zeros((0, config.dict_size))


def connected_entities(store: TripleStore, rel_id: int, split: str = "train") -> np.ndarray:
    """Distinct heads of ``rel_id`` in first-occurrence order (for a reciprocal these are the base tails)."""
    t = store.splits[split]
    heads = t[t[:, 1] == rel_id, 0]
    _, first = np.unique(heads, return_index=True)
    return heads[np.sort(first)]


def diagnose(params: Params, config: TrainConfig, store: TripleStore, split: str = "train") -> EvalReport:
    """Mean SOL over the split's distinct queries and per-relation DIV/DAE.

    Relations without triples in ``split`` are left out of the DAE table.
    """
    if not config.codlr or "dictionary" not in params:
        raise ValueError("diagnostics require codlr mode")
    t = store.splits[split]
    pairs = np.unique(t[:, :2], axis=0)
    sol_mean = float(np.mean(sol(lookup_vectors(params, config, pairs)))) if len(pairs) else float("nan")
    rows = []
    ents = params["entity"]
    for r in range(store.num_relations):
        heads = connected_entities(store, r, split)
        if len(heads) == 0:
            continue
        de, dd, gap = dae(ents[heads], params["dictionary"][r])
        rows.append((store.vocab.relation_names[r], de, dd, gap))
    return EvalReport(ranking={}, sol_mean=sol_mean, dae_rows=rows)


class UnknownRelationError(KeyError):
    def __init__(self, name: str, suggestions: list[str]):
        hint = f"; did you mean {', '.join(suggestions)}?" if suggestions else ""
        super().__init__(f"unknown relation {name!r}{hint}")
        self.suggestions = suggestions

    def __str__(self):
        return self.args[0]


def relation_id(store: TripleStore, name: str) -> int:
    try:
        return store.vocab.relation_index[name]
    except KeyError:
        close = difflib.get_close_matches(name, store.vocab.relation_names, n=5, cutoff=0.3)
        raise UnknownRelationError(name, close) from None


def project(params: Params, config: TrainConfig, store: TripleStore, relation: str):
    """Rows ``(entity, x, y, label)``: 2-D PCA of the relation's connected entities,
    labelled by the argmax of each entity's lookup vector."""
    if not config.codlr:
        raise ValueError("projection labels require codlr mode")
    r = relation_id(store, relation)
    heads = connected_entities(store, r)
    if len(heads) == 0:
        raise ValueError(f"relation {relation!r} has no training triples")
    pairs = np.stack([heads, np.full_like(heads, r)], axis=1)
    labels = lookup_vectors(params, config, pairs).argmax(axis=1)
    emb = params["entity"][heads]
    xy = pca2(emb) if len(heads) >= 2 else np.zeros((1, 2))
    names = store.vocab.entity_names
    return [(names[h], float(x), float(y), int(l)) for h, (x, y), l in zip(heads.tolist(), xy, labels)]
