import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from codlr.config import TrainConfig
from codlr.model import dual_scores, init_params
from codlr.ndmath import sigmoid
from codlr.scorers import score_all_tails, score_distmult, score_transe, tail_logits


def test_transe_examples():
    assert score_transe([1, 2], [0.5, -1], [1.5, 1]) == 0.5
    h, r = np.zeros(3), np.zeros(3)
    assert score_transe(h, r, [2.0, 0, 0]) == pytest.approx(0.1192029, abs=1e-6)
    direction = np.array([0.6, 0.8])
    scores = [score_transe([1, 1], [0, 1], np.array([1, 2]) + k * direction) for k in np.linspace(0, 5, 11)]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_distmult_examples():
    assert score_distmult([0, 0], [1, 2], [3, 4]) == 0.5
    assert score_distmult([1, 1], [1, 1], [1, 1]) == pytest.approx(0.880797, abs=1e-6)
    rng = np.random.default_rng(0)
    h, r, t = rng.standard_normal((3, 6))
    assert score_distmult(h, r, t) == pytest.approx(score_distmult(t, r, h))


@pytest.mark.parametrize("kind", ["transe", "distmult"])
def test_score_all_tails_matches_loop(kind):
    rng = np.random.default_rng(1)
    ents = rng.standard_normal((3, 4))
    s = rng.standard_normal(4)
    single = {"transe": score_transe, "distmult": score_distmult}[kind]
    loop = [single(ents[0], s, e) for e in ents]
    np.testing.assert_allclose(score_all_tails(kind, ents[0], s, ents), loop, atol=1e-6)


def test_distmult_zero_semantics_and_transe_argmax():
    rng = np.random.default_rng(2)
    ents = rng.standard_normal((7, 3))
    np.testing.assert_array_equal(score_all_tails("distmult", ents[0], np.zeros(3), ents), 0.5)
    s = rng.standard_normal(3)
    scores = score_all_tails("transe", ents[1], s, ents)
    assert np.argmax(scores) == np.argmin(np.linalg.norm(ents[1] + s - ents, axis=1))


def _codlr_config(kind, composition="sum", **kw):
    kw.setdefault("dict_size", 3)
    return TrainConfig(scorer=kind, mode="codlr", dim=4, composition=composition, **kw)


def test_uniform_lookup_gives_equal_dual_scores():
    cfg = _codlr_config("transe")
    p = init_params(cfg, 5, 2, seed=0)
    p["lookup_weight"][:] = 0
    out = dual_scores(p, cfg, [0, 1, 2], [0, 1, 0])
    np.testing.assert_allclose(out.scores_c, out.scores_f, atol=1e-7)


def test_one_hot_lookup_uses_one_row():
    cfg = _codlr_config("distmult", dict_size=2)
    p = init_params(cfg, 5, 2, seed=0)
    p["lookup_weight"][:] = 0
    p["lookup_bias"][:] = [0.0, 60.0]
    out = dual_scores(p, cfg, [3], [1])
    np.testing.assert_allclose(out.semantics_f[0], p["dictionary"][1, 1], atol=1e-6)


@pytest.mark.parametrize("kind", ["transe", "distmult"])
@pytest.mark.parametrize("composition", ["sum", "concat", "mult", "corr"])
def test_dual_scores_match_double_precision_oracle(kind, composition):
    cfg = _codlr_config(kind, composition, activation="tanh")
    p = init_params(cfg, 6, 2, seed=3)
    rng = np.random.default_rng(3)
    for k in p:  # larger values so differences are visible at 1e-5
        p[k] = (rng.standard_normal(p[k].shape)).astype(np.float32)
    out = dual_scores(p, cfg, [0, 4], [1, 0])
    f = lambda a: a.astype(float).tolist()
    for row, (head, rel) in enumerate([(0, 1), (4, 0)]):
        ref_c, ref_f = oracles.dual(kind, composition, "tanh", f(p["entity"]), f(p["dictionary"][rel]),
                                    f(p["lookup_weight"]), f(p["lookup_bias"]), head)
        np.testing.assert_allclose(out.scores_c[row], ref_c, atol=1e-5)
        np.testing.assert_allclose(out.scores_f[row], ref_f, atol=1e-5)


def test_plain_mode_has_no_central_scores():
    cfg = TrainConfig(scorer="transe", mode="plain", dim=4)
    p = init_params(cfg, 4, 2)
    with pytest.raises(ValueError):
        dual_scores(p, cfg, [0], [0]).scores_c


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.sampled_from(["transe", "distmult"]))
def test_scores_in_unit_interval_and_rank_by_logit(seed, kind):
    rng = np.random.default_rng(seed)
    ents = rng.standard_normal((20, 5))
    h, s = rng.standard_normal((2, 1, 5))
    logits = tail_logits(kind, h, s, ents)[0]
    scores = sigmoid(logits)
    assert np.all((scores > 0) & (scores < 1))
    np.testing.assert_array_equal(np.argsort(-scores, kind="stable"), np.argsort(-logits, kind="stable"))
