"""TransE and DistMult plausibility scores, single-triple and 1-vs-all-entities.

Batched routines work on logits (the pre-sigmoid value); probabilities are
``sigmoid(logit)``. For TransE the logit is the negated L2 distance so that
valid triples score higher.
"""

from __future__ import annotations

import numpy as np

from .ndmath import sigmoid

SCORERS = ("transe", "distmult")

# below this distance the TransE gradient direction is undefined; treated as 0
_MIN_DIST = 1e-12


def score_transe(h, r, t) -> float:
    h, r, t = (np.asarray(v, dtype=np.float64) for v in (h, r, t))
    return float(sigmoid(-np.linalg.norm(h + r - t)))


def score_distmult(h, r, t) -> float:
    h, r, t = (np.asarray(v, dtype=np.float64) for v in (h, r, t))
    return float(sigmoid(np.dot(h * r, t)))


SINGLE = {"transe": score_transe, "distmult": score_distmult}


def _distances(u: np.ndarray, ents: np.ndarray) -> np.ndarray:
    sq = (u * u).sum(axis=1)[:, None] + (ents * ents).sum(axis=1)[None, :] - 2.0 * (u @ ents.T)
    return np.sqrt(np.maximum(sq, 0.0))


def tail_logits(kind: str, h, semantics, ents) -> np.ndarray:
    """Logits of (h_b, semantics_b, e) for every row b and every entity e: shape (B, |E|)."""
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(semantics, dtype=np.float64)
    ents = np.asarray(ents, dtype=np.float64)
    if kind == "transe":
        return -_distances(h + s, ents)
    if kind == "distmult":
        return (h * s) @ ents.T
    raise ValueError(f"unknown scorer {kind!r}")


def tail_logits_backward(kind: str, h, semantics, ents, logits, grad) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Given dLoss/dlogits (B, |E|) return gradients on (h, semantics, entity table)."""
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(semantics, dtype=np.float64)
    ents = np.asarray(ents, dtype=np.float64)
    if kind == "transe":
        u = h + s
        dist = -logits
        w = np.where(dist > _MIN_DIST, grad / np.maximum(dist, _MIN_DIST), 0.0)
        # logit = -||u - e||: d/du = -(u - e)/dist, d/de = (u - e)/dist
        g_u = -(u * w.sum(axis=1, keepdims=True) - w @ ents)
        g_ents = w.T @ u - ents * w.sum(axis=0)[:, None]
        return g_u, g_u.copy(), g_ents
    if kind == "distmult":
        q = h * s
        g_q = grad @ ents
        return g_q * s, g_q * h, grad.T @ q
    raise ValueError(f"unknown scorer {kind!r}")


def score_all_tails(kind: str, h, semantics, ents) -> np.ndarray:
    """Probabilities for one query against every entity."""
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    s = np.atleast_2d(np.asarray(semantics, dtype=np.float64))
    return sigmoid(tail_logits(kind, h, s, ents))[0]
