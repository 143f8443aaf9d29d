"""Contextual dictionary lookup: central semantics, context composition, lookup
MLP + softmax, and the resulting fine-grained relation semantics.

All functions are batched over a leading axis; a single query is a batch of one.
Shapes: entity ``h`` (B, d), dictionary ``D`` (B, n, d), weight (d_c, n) shared
or (B, d_c, n) per row, bias (n,) or (B, n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ndmath import circular_convolution, circular_correlation, get_activation, softmax

COMPOSITIONS = ("sum", "concat", "mult", "corr")
ABLATIONS = ("central_only", "entity_only")
ALL_COMPOSITIONS = COMPOSITIONS + ABLATIONS


def context_dim(kind: str, d: int) -> int:
    if kind not in ALL_COMPOSITIONS:
        raise ValueError(f"unknown composition {kind!r}")
    return 2 * d if kind == "concat" else d


def central_semantics(dictionary) -> np.ndarray:
    """Mean of the dictionary rows (axis -2)."""
    d = np.asarray(dictionary, dtype=np.float64)
    return d.sum(axis=-2) / d.shape[-2]


def compose(kind: str, h, center) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    if h.shape != c.shape:
        raise ValueError(f"entity {h.shape} and center {c.shape} differ in shape")
    if kind == "sum":
        return h + c
    if kind == "concat":
        return np.concatenate([h, c], axis=-1)
    if kind == "mult":
        return h * c
    if kind == "corr":
        return circular_correlation(h, c)
    if kind == "central_only":
        return c.copy()
    if kind == "entity_only":
        return h.copy()
    raise ValueError(f"unknown composition {kind!r}")


def compose_backward(kind: str, h, center, grad) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``compose`` w.r.t. (h, center) given upstream ``grad`` on the context."""
    zero = np.zeros_like(h, dtype=np.float64)
    if kind == "sum":
        return grad, grad
    if kind == "concat":
        d = h.shape[-1]
        return grad[..., :d], grad[..., d:]
    if kind == "mult":
        return grad * center, grad * h
    if kind == "corr":
        return circular_correlation(grad, center), circular_convolution(h, grad)
    if kind == "central_only":
        return zero, grad
    if kind == "entity_only":
        return grad, zero
    raise ValueError(f"unknown composition {kind!r}")


@dataclass
class LookupMLP:
    weight: np.ndarray  # (d_c, n), or (R, d_c, n) when each relation owns one
    bias: np.ndarray  # (n,) or (R, n)
    activation: str = "relu"

    @property
    def per_relation(self) -> bool:
        return self.weight.ndim == 3

    def select(self, rel_ids) -> tuple[np.ndarray, np.ndarray]:
        if self.per_relation:
            return self.weight[rel_ids], self.bias[rel_ids]
        return self.weight, self.bias


def lookup(weight, bias, context, activation: str = "relu") -> tuple[np.ndarray, np.ndarray]:
    """Return (G, L): G = act(C W + b) maps d_c -> n, L = softmax(G)."""
    act, _ = get_activation(activation)
    c = np.asarray(context, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    if w.ndim == 3:
        z = np.einsum("bc,bcn->bn", c, w)
    else:
        z = c @ w
    z = z + np.asarray(bias, dtype=np.float64)
    g = act(z)
    return g, softmax(g)


def fine_grained(weights, dictionary) -> np.ndarray:
    """Weighted sum of dictionary rows, ``L^T D``."""
    return np.einsum("...n,...nd->...d", np.asarray(weights, dtype=np.float64),
                     np.asarray(dictionary, dtype=np.float64))


@dataclass
class LookupTrace:
    entity: np.ndarray  # (B, d)
    dictionary: np.ndarray  # (B, n, d)
    center: np.ndarray  # (B, d)
    context: np.ndarray  # (B, d_c)
    pre_activation: np.ndarray  # (B, n), MLP input to the nonlinearity
    pre_softmax: np.ndarray  # (B, n), G
    lookup: np.ndarray  # (B, n), L
    fine: np.ndarray  # (B, d)
    kind: str
    activation: str


@dataclass
class LookupGrads:
    dictionary: np.ndarray
    weight: np.ndarray  # summed (d_c, n) for a shared MLP, per-row (B, d_c, n) otherwise
    bias: np.ndarray
    entity: np.ndarray


def forward(weight, bias, dictionary, h, kind: str, activation: str = "relu") -> LookupTrace:
    h = np.asarray(h, dtype=np.float64)
    dictionary = np.asarray(dictionary, dtype=np.float64)
    center = central_semantics(dictionary)
    context = compose(kind, h, center)
    act, _ = get_activation(activation)
    w = np.asarray(weight, dtype=np.float64)
    z = (np.einsum("bc,bcn->bn", context, w) if w.ndim == 3 else context @ w) + np.asarray(bias, np.float64)
    g = act(z)
    weights = softmax(g)
    return LookupTrace(
        entity=h, dictionary=dictionary, center=center, context=context,
        pre_activation=z, pre_softmax=g, lookup=weights,
        fine=fine_grained(weights, dictionary), kind=kind, activation=activation,
    )


def backward(trace: LookupTrace, weight, grad_fine, grad_center) -> LookupGrads:
    """Chain rule through fine = L^T D, softmax, the MLP, composition and the mean.

    The dictionary collects gradient from three places: the weighted sum, the
    center inside the context, and ``grad_center`` (the center used directly by
    the caller's central score).
    """
    grad_fine = np.asarray(grad_fine, dtype=np.float64)
    grad_center = np.asarray(grad_center, dtype=np.float64)
    if grad_fine.shape != trace.fine.shape or grad_center.shape != trace.center.shape:
        raise ValueError("upstream gradient shapes do not match the trace")
    weights, dic = trace.lookup, trace.dictionary
    n = dic.shape[-2]

    g_dict = weights[..., :, None] * grad_fine[..., None, :]
    g_lookup = np.einsum("bnd,bd->bn", dic, grad_fine)
    g_g = weights * (g_lookup - (weights * g_lookup).sum(axis=-1, keepdims=True))
    _, dact = get_activation(trace.activation)
    g_z = g_g * dact(trace.pre_activation, trace.pre_softmax)

    w = np.asarray(weight, dtype=np.float64)
    if w.ndim == 3:
        g_w = trace.context[:, :, None] * g_z[:, None, :]
        g_b = g_z
        g_context = np.einsum("bn,bcn->bc", g_z, w)
    else:
        g_w = trace.context.T @ g_z
        g_b = g_z.sum(axis=0)
        g_context = g_z @ w.T

    g_h, g_c = compose_backward(trace.kind, trace.entity, trace.center, g_context)
    g_c = g_c + grad_center
    g_dict = g_dict + g_c[..., None, :] / n
    return LookupGrads(dictionary=g_dict, weight=g_w, bias=g_b, entity=np.array(g_h, dtype=np.float64))
