"""Ranking metrics with filtering and random tie placement, plus lookup diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HITS_AT = (1, 3, 10)


def rank_gold(scores, gold_id: int, excluded, rng: np.random.Generator) -> int:
    """1-based rank of ``gold_id`` after dropping ``excluded``; ties are placed uniformly at random.

    rank = 1 + #strictly-better + u, u ~ Uniform{0, ..., #tied-others}.
    """
    scores = np.asarray(scores)
    excluded = set(int(e) for e in excluded)
    if int(gold_id) in excluded:
        raise ValueError("gold entity must not be filtered")
    keep = np.ones(scores.shape[0], dtype=bool)
    if excluded:
        keep[list(excluded)] = False
    s = scores[keep]
    g = scores[gold_id]
    better = int(np.count_nonzero(s > g))
    ties = int(np.count_nonzero(s == g)) - 1
    return 1 + better + (int(rng.integers(0, ties + 1)) if ties else 0)


def aggregate(ranks) -> dict[str, float]:
    r = np.asarray(ranks, dtype=np.float64)
    if r.size == 0:
        raise ValueError("cannot aggregate an empty rank list")
    if np.any(r < 1):
        raise ValueError("ranks are 1-based")
    out = {"MR": float(r.mean()), "MRR": float((1.0 / r).mean())}
    for k in HITS_AT:
        out[f"H@{k}"] = float((r <= k).mean())
    return out


def sol(lookup) -> np.ndarray | float:
    """Sparseness of a lookup vector: 0 for uniform, 1 for one-hot. Row-wise on 2-D input."""
    p = np.asarray(lookup, dtype=np.float64)
    n = p.shape[-1]
    if n < 2:
        raise ValueError("sparseness needs at least two entries")
    if np.any(p < -1e-9) or np.any(np.abs(p.sum(axis=-1) - 1.0) > 1e-6):
        raise ValueError("lookup must be a probability vector")
    j = (p * p).sum(axis=-1)
    out = (j - 1.0 / n) / (1.0 - 1.0 / n)
    return float(out) if np.ndim(out) == 0 else out


def div(vectors) -> float:
    """Internal diversity of a vector set: (1 - mean cosine to the set mean) / 2.

    A cosine whose denominator is below 1e-12 counts as 0.
    """
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] == 0:
        raise ValueError("div needs a non-empty (m, d) set")
    center = v.mean(axis=0)
    denom = np.linalg.norm(v, axis=1) * np.linalg.norm(center)
    cos = np.divide(v @ center, denom, out=np.zeros(len(v)), where=denom >= 1e-12)
    return float((1.0 - np.clip(cos, -1.0, 1.0).mean()) / 2.0)


def dae(entity_vectors, dictionary) -> tuple[float, float, float]:
    """(DIV of the relation's connected entities, DIV of its dictionary, |difference|)."""
    de, dd = div(entity_vectors), div(dictionary)
    return de, dd, abs(de - dd)


@dataclass
class EvalReport:
    ranking: dict[str, float]
    sol_mean: float | None = None
    dae_rows: list[tuple[str, float, float, float]] = field(default_factory=list)

    @property
    def dae_mean(self) -> float | None:
        return float(np.mean([r[3] for r in self.dae_rows])) if self.dae_rows else None
