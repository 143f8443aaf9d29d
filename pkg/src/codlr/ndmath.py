"""Dense numeric primitives shared by the scorers, the lookup and the trainer.

Parameters are stored as float32 elsewhere in the package; everything here
promotes to float64 before reducing.
"""

from __future__ import annotations

import functools
from typing import Callable

import numpy as np
from scipy.special import expit

Activation = tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray, np.ndarray], np.ndarray]]


@functools.lru_cache(maxsize=64)
def _roll_index(d: int, sign: int = 1) -> np.ndarray:
    k = np.arange(d)
    return (k[:, None] + sign * k[None, :]) % d


def circular_correlation(a, b) -> np.ndarray:
    """``out[k] = sum_i a[i] * b[(k + i) mod d]``, direct O(d^2) evaluation.

    Leading axes broadcast, so ``a`` and ``b`` may be batches of shape (B, d).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} != {b.shape[-1]}")
    idx = _roll_index(a.shape[-1], 1)
    return np.einsum("...i,...ki->...k", a, b[..., idx])


def circular_convolution(a, b) -> np.ndarray:
    """``out[j] = sum_i a[i] * b[(j - i) mod d]``; the adjoint of correlation in its second argument."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} != {b.shape[-1]}")
    idx = _roll_index(a.shape[-1], -1)
    return np.einsum("...i,...ji->...j", a, b[..., idx])


def softmax(g, axis: int = -1) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    z = np.exp(g - g.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def sigmoid(x):
    return expit(np.asarray(x, dtype=np.float64))


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


# Derivatives are written in terms of (pre-activation, output) so callers can
# pass whichever they kept around.
ACTIVATIONS: dict[str, Activation] = {
    "relu": (relu, lambda z, y: (z > 0).astype(np.float64)),
    "tanh": (np.tanh, lambda z, y: 1.0 - y * y),
    "identity": (lambda z: np.asarray(z, dtype=np.float64), lambda z, y: np.ones_like(y)),
}


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None


def numeric_gradient(f: Callable[[np.ndarray], float], theta, eps: float = 1e-3,
                     richardson: bool = False) -> np.ndarray:
    """Central differences; with ``richardson`` combine steps eps and eps/2 to cancel the O(eps^2) term."""
    theta = np.array(theta, dtype=np.float64).ravel()

    def central(step):
        grad = np.zeros_like(theta)
        for i in range(theta.size):
            x = theta.copy()
            x[i] = theta[i] + step
            f_plus = float(f(x))
            x[i] = theta[i] - step
            f_minus = float(f(x))
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise FloatingPointError(f"objective is not finite around coordinate {i}")
            grad[i] = (f_plus - f_minus) / (2.0 * step)
        return grad

    if richardson:
        return (4.0 * central(eps / 2) - central(eps)) / 3.0
    return central(eps)


def grad_check(f: Callable[[np.ndarray], float], theta, analytic_grad, eps: float = 1e-3,
               richardson: bool = False) -> float:
    """Max relative error between ``analytic_grad`` and central differences of ``f`` at ``theta``.

    Per coordinate the error is ``|fd - an| / max(1e-8, |fd| + |an|)``, so a
    sign-flipped gradient scores 1 and a correct one scores ~0. Coordinates
    whose gradient is many orders below the largest one need ``richardson``
    to get past the O(eps^2) truncation error.
    """
    analytic = np.asarray(analytic_grad, dtype=np.float64).ravel()
    fd = numeric_gradient(f, theta, eps, richardson)
    if fd.shape != analytic.shape:
        raise ValueError(f"gradient shape {analytic.shape} does not match parameters {fd.shape}")
    denom = np.maximum(1e-8, np.abs(fd) + np.abs(analytic))
    return float(np.max(np.abs(fd - analytic) / denom)) if fd.size else 0.0


def _top_eigvec(cov: np.ndarray, against: np.ndarray | None, tol: float, max_iter: int) -> np.ndarray:
    d = cov.shape[0]
    v = np.random.default_rng(0).standard_normal(d)
    for _ in range(max_iter):
        if against is not None:
            v = v - (v @ against) * against
        norm = np.linalg.norm(v)
        if norm < 1e-300:
            break
        v = v / norm
        w = cov @ v
        if against is not None:
            w = w - (w @ against) * against
        wn = np.linalg.norm(w)
        if wn < 1e-12:
            return v
        w = w / wn
        done = min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol
        v = w
        if done:
            break
    return v


def pca2(points, tol: float = 1e-6, max_iter: int = 1000) -> np.ndarray:
    """Project rows onto the top-2 principal axes, found by power iteration with deflation.

    Each axis is sign-fixed so its largest-magnitude loading is positive.
    Axes with (numerically) zero variance project to zeros.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pca2 needs a (m, d) matrix with m >= 2")
    m, d = x.shape
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / (m - 1)
    scale = max(float(np.trace(cov)), 0.0)
    out = np.zeros((m, 2))
    if scale <= 1e-24:
        return out
    axes = []
    for c in range(min(2, d)):
        v = _top_eigvec(cov, axes[0] if axes else None, tol, max_iter)
        if float(v @ cov @ v) <= 1e-12 * scale:
            break
        j = int(np.argmax(np.abs(v)))
        if v[j] < 0:
            v = -v
        axes.append(v)
        out[:, c] = xc @ v
    return out
