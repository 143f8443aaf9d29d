"""Shared builders for small graphs and flat parameter vectors."""

import numpy as np

from codlr.data import build_store


def random_store(num_entities=6, num_base_rel=2, num_triples=10, seed=0, test_frac=0.0):
    rng = np.random.default_rng(seed)
    seen = set()
    while len(seen) < num_triples:
        h, t = rng.integers(num_entities, size=2)
        r = rng.integers(num_base_rel)
        seen.add((int(h), int(r), int(t)))
    triples = sorted(seen)
    names = [(f"e{h}", f"r{r}", f"e{t}") for h, r, t in triples]
    # make sure every entity and relation id appears, in order, so ids equal the suffixes
    anchor = [(f"e{i}", f"r{i % num_base_rel}", f"e{i}") for i in range(num_entities)]
    n_test = int(round(test_frac * len(names)))
    return build_store({"train": anchor + names[n_test:], "valid": [], "test": names[:n_test]})


def flatten(params):
    keys = sorted(params)
    return keys, np.concatenate([params[k].astype(np.float64).ravel() for k in keys])


def unflatten(keys, shapes, theta):
    out, pos = {}, 0
    for k in keys:
        size = int(np.prod(shapes[k]))
        out[k] = theta[pos : pos + size].reshape(shapes[k])
        pos += size
    return out


def model_grad_error(config, store, seed, kink_margin=0.02, max_redraws=50, scale=1.0,
                     richardson=True):
    """Max relative error of the analytic gradient of the full training loss.

    Parameters are drawn from the model initializer (times ``scale``) and
    held in float64; the lookup bias is drawn uniform in [-1, 1]. With relu, a draw whose MLP pre-activations
    sit within ``kink_margin`` of 0 is redrawn: finite differences straddling
    the kink do not estimate a derivative.
    """
    from codlr.model import batch_loss, init_params, lookup_trace, loss_and_grads, multi_hot
    from codlr.ndmath import grad_check

    pairs = store.training_pairs()
    heads, rels = pairs[:, 0], pairs[:, 1]
    targets = multi_hot(store, heads, rels, config.label_smoothing)
    for k in range(max_redraws):
        rng = np.random.default_rng([seed, k])
        params = init_params(config, store.num_entities, store.num_relations, seed=seed * 1000 + k)
        params = {name: v.astype(np.float64) * scale for name, v in params.items()}
        if "lookup_bias" in params:
            params["lookup_bias"] = rng.uniform(-1, 1, params["lookup_bias"].shape)
        if config.codlr and config.activation == "relu":
            z = lookup_trace(params, config, heads, rels).pre_activation
            if np.abs(z).min() < kink_margin:
                continue
        break
    keys, theta = flatten(params)
    shapes = {name: params[name].shape for name in keys}
    _, grads = loss_and_grads(params, config, heads, rels, targets)
    analytic = np.concatenate([grads[name].ravel() for name in keys])
    f = lambda x: batch_loss(unflatten(keys, shapes, x), config, heads, rels, targets)
    return grad_check(f, theta, analytic, richardson=richardson)
