import math

import numpy as np
import pytest

from polyreg.encoder import (
    EncoderConfig,
    bucket_ids,
    embed,
    fnv1a64,
    init_encoder_params,
    lora_project,
    lora_project_backward,
    pool,
    pool_backward,
    tokenize,
)
from polyreg.model import ModelConfig, PropertyModel


# ---- tokenizer and hashing ------------------------------------------------


def test_tokenize_examples():
    tokens = tokenize("[Sample]\nPLA Film, Tg [MASKED] °C at 2.5e3 Pa")
    assert tokens[:4] == ["[Sample]", "pla", "film", "tg"]
    assert "[MASKED]" in tokens
    assert "2.5e3" in tokens


def test_tokenize_lowercases_words_keeps_numbers():
    assert tokenize("Cured 150 Minutes") == ["cured", "150", "minutes"]


def test_fnv1a64_known_vectors():
    # published FNV-1a reference values
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C


def test_bucket_ids_stable_and_in_range():
    ids = bucket_ids(["alpha", "beta", "alpha"], 1024)
    assert ids[0] == ids[2]
    assert np.all((0 <= ids) & (ids < 1024))
    assert np.array_equal(ids, bucket_ids(["alpha", "beta", "alpha"], 1024))


def test_hash_collision_rate_matches_birthday_bound():
    # k distinct tokens into V buckets: P(any collision) ~ 1 - exp(-k(k-1)/2V)
    V = 2**16
    k = 10_000
    tokens = [f"tok{i}" for i in range(k)]
    collided = len(set(bucket_ids(tokens, V).tolist())) < k
    expected = 1.0 - math.exp(-k * (k - 1) / (2 * V))
    assert abs(float(collided) - expected) <= 0.2


def test_hash_collision_rate_fine_grained():
    # 200 trials of 300 random tokens: collision prob ~ 0.495.  Random
    # strings rather than sequential suffixes; FNV spreads structured
    # suffixes more evenly than a uniform hash would.
    V = 2**16
    k = 300
    hits = 0
    trials = 200
    rng = np.random.default_rng(42)
    letters = np.array(list("abcdefghijklmnopqrstuvwxyz0123456789"))
    for _ in range(trials):
        chars = rng.choice(letters, size=(k, 12))
        tokens = ["".join(row) for row in chars]
        if len(set(bucket_ids(tokens, V).tolist())) < len(set(tokens)):
            hits += 1
    expected = 1.0 - math.exp(-k * (k - 1) / (2 * V))
    assert abs(hits / trials - expected) <= 0.15


# ---- embedding lookup -----------------------------------------------------


def test_embed_rows_and_empty():
    table = np.arange(12.0).reshape(4, 3)
    out = embed(np.array([2, 0]), table)
    assert np.array_equal(out, table[[2, 0]])
    empty = embed(np.array([], dtype=np.int64), table)
    assert empty.shape == (1, 3) and np.all(empty == 0)


def test_encoder_init_deterministic():
    cfg = EncoderConfig(vocab_size=256, dim=16, rank=4)
    a = init_encoder_params(cfg, np.random.default_rng(7))
    b = init_encoder_params(cfg, np.random.default_rng(7))
    for name in a:
        assert np.array_equal(a[name], b[name])


# ---- low-rank adapter -----------------------------------------------------


def test_lora_zero_b_is_exactly_frozen_projection():
    cfg = EncoderConfig(vocab_size=64, dim=16, rank=4)
    params = init_encoder_params(cfg, np.random.default_rng(0))
    H = np.random.default_rng(1).normal(size=(3, 5, 16))
    out = lora_project(H, params, cfg)
    assert np.array_equal(out, H @ params["w0"].T)


def test_lora_matches_dense_rowwise_oracle():
    cfg = EncoderConfig(vocab_size=64, dim=12, rank=3, alpha=6.0)
    rng = np.random.default_rng(2)
    params = init_encoder_params(cfg, rng)
    params["lora_b"] = rng.normal(size=params["lora_b"].shape)
    H = rng.normal(size=(4, 7, 12))
    out = lora_project(H, params, cfg)
    scale = cfg.alpha / cfg.rank
    dense = params["w0"] + scale * params["lora_b"] @ params["lora_a"]
    for b in range(4):
        for t in range(7):
            ref = dense @ H[b, t]
            assert np.allclose(out[b, t], ref, rtol=0, atol=1e-12)


def test_lora_subspace_projection_identity():
    # W0 = 0, A = first r rows of I, B = A^T, alpha = r: output keeps the
    # first r coordinates and zeroes the rest
    d, r = 8, 3
    cfg = EncoderConfig(vocab_size=16, dim=d, rank=r, alpha=float(r))
    params = init_encoder_params(cfg, np.random.default_rng(0))
    params["w0"] = np.zeros((d, d))
    params["lora_a"] = np.eye(d)[:r]
    params["lora_b"] = np.eye(d)[:r].T
    x = np.arange(1.0, d + 1.0)[None, :]
    out = lora_project(x, params, cfg)
    expected = np.concatenate([x[0, :r], np.zeros(d - r)])
    assert np.allclose(out[0], expected, atol=1e-15)


def test_lora_backward_finite_difference():
    cfg = EncoderConfig(vocab_size=32, dim=6, rank=2, alpha=4.0)
    rng = np.random.default_rng(3)
    params = init_encoder_params(cfg, rng)
    params["lora_b"] = rng.normal(size=params["lora_b"].shape)
    H = rng.normal(size=(2, 4, 6))
    G = rng.normal(size=(2, 4, 6))  # upstream gradient

    def f(p):
        return float((lora_project(H, p, cfg) * G).sum())

    dH, dA, dB = lora_project_backward(G, H, params, cfg)
    eps = 1e-6
    for name, grad in (("lora_a", dA), ("lora_b", dB)):
        numeric = np.zeros_like(params[name])
        for idx in np.ndindex(params[name].shape):
            p = {k: v.copy() for k, v in params.items()}
            p[name][idx] += eps
            up = f(p)
            p[name][idx] -= 2 * eps
            down = f(p)
            numeric[idx] = (up - down) / (2 * eps)
        assert np.allclose(grad, numeric, rtol=1e-5, atol=1e-7)
    # dH via a few random coordinates
    for idx in [(0, 1, 2), (1, 3, 5), (0, 0, 0)]:
        Hp = H.copy()
        Hp[idx] += eps
        up = float((lora_project(Hp, params, cfg) * G).sum())
        Hp[idx] -= 2 * eps
        down = float((lora_project(Hp, params, cfg) * G).sum())
        assert dH[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-5, abs=1e-7)


# ---- pooling --------------------------------------------------------------


def _params(cfg, seed=0):
    return init_encoder_params(cfg, np.random.default_rng(seed))


def test_mean_pool_fixed_point():
    cfg = EncoderConfig(vocab_size=16, dim=4, rank=2, pooling_mode="mean")
    row = np.array([1.0, -2.0, 3.0, 0.5])
    H = np.tile(row, (1, 5, 1))
    mask = np.ones((1, 5), dtype=bool)
    pooled, _ = pool(H, mask, _params(cfg), cfg)
    assert np.allclose(pooled[0], row, atol=1e-15)


def test_attention_with_zero_query_equals_mean():
    rng = np.random.default_rng(4)
    H = rng.normal(size=(2, 6, 8))
    mask = np.ones((2, 6), dtype=bool)
    mask[1, 4:] = False
    cfg_a = EncoderConfig(vocab_size=16, dim=8, rank=2, pooling_mode="attention")
    cfg_m = EncoderConfig(vocab_size=16, dim=8, rank=2, pooling_mode="mean")
    params = _params(cfg_a)
    assert np.all(params["attn_q"] == 0)
    pa, _ = pool(H, mask, params, cfg_a)
    pm, _ = pool(H, mask, params, cfg_m)
    assert np.allclose(pa, pm, atol=1e-12)


def test_attention_softmax_known_weights():
    # scores (0, ln 3) -> weights (0.25, 0.75)
    cfg = EncoderConfig(vocab_size=16, dim=2, rank=1, pooling_mode="attention")
    params = _params(cfg)
    params["attn_q"] = np.array([1.0, 0.0])
    H = np.array([[[0.0, 5.0], [math.log(3.0), -1.0]]])
    mask = np.ones((1, 2), dtype=bool)
    pooled, cache = pool(H, mask, params, cfg)
    assert np.allclose(cache["weights"][0], [0.25, 0.75], atol=1e-12)
    assert np.allclose(pooled[0], 0.25 * H[0, 0] + 0.75 * H[0, 1], atol=1e-12)


def test_attention_pool_stays_in_convex_hull():
    rng = np.random.default_rng(5)
    cfg = EncoderConfig(vocab_size=16, dim=6, rank=2, pooling_mode="attention")
    params = _params(cfg)
    params["attn_q"] = rng.normal(size=6)
    H = rng.normal(size=(3, 9, 6))
    mask = rng.random((3, 9)) < 0.7
    mask[:, 0] = True
    pooled, _ = pool(H, mask, params, cfg)
    for b in range(3):
        rows = H[b][mask[b]]
        assert np.all(pooled[b] <= rows.max(axis=0) + 1e-12)
        assert np.all(pooled[b] >= rows.min(axis=0) - 1e-12)


def test_pool_padding_invariance():
    rng = np.random.default_rng(6)
    for mode in ("mean", "attention"):
        cfg = EncoderConfig(vocab_size=16, dim=5, rank=2, pooling_mode=mode)
        params = _params(cfg)
        params["attn_q"] = rng.normal(size=5)
        H = rng.normal(size=(1, 4, 5))
        mask = np.ones((1, 4), dtype=bool)
        pooled, _ = pool(H, mask, params, cfg)
        H_pad = np.concatenate([H, rng.normal(size=(1, 3, 5)) * 100], axis=1)
        mask_pad = np.concatenate([mask, np.zeros((1, 3), dtype=bool)], axis=1)
        pooled_pad, _ = pool(H_pad, mask_pad, params, cfg)
        assert np.allclose(pooled, pooled_pad, rtol=0, atol=1e-12)


def test_pool_all_masked_gives_zero_vector():
    for mode in ("mean", "attention"):
        cfg = EncoderConfig(vocab_size=16, dim=3, rank=1, pooling_mode=mode)
        H = np.random.default_rng(7).normal(size=(2, 4, 3))
        mask = np.zeros((2, 4), dtype=bool)
        mask[0] = True
        pooled, _ = pool(H, mask, _params(cfg), cfg)
        assert np.all(pooled[1] == 0)
        assert np.all(np.isfinite(pooled))


def test_pool_backward_finite_difference():
    rng = np.random.default_rng(8)
    for mode in ("mean", "attention"):
        cfg = EncoderConfig(vocab_size=16, dim=4, rank=2, pooling_mode=mode)
        params = _params(cfg)
        params["attn_q"] = rng.normal(size=4)
        H = rng.normal(size=(2, 5, 4))
        mask = np.ones((2, 5), dtype=bool)
        mask[1, 3:] = False
        G = rng.normal(size=(2, 4))

        def f(Hx, q):
            p = dict(params, attn_q=q)
            out, _ = pool(Hx, mask, p, cfg)
            return float((out * G).sum())

        _, cache = pool(H, mask, params, cfg)
        dH, dq = pool_backward(G, H, cache, params, cfg)
        eps = 1e-6
        for idx in [(0, 0, 0), (1, 2, 3), (0, 4, 1)]:
            Hp = H.copy()
            Hp[idx] += eps
            up = f(Hp, params["attn_q"])
            Hp[idx] -= 2 * eps
            down = f(Hp, params["attn_q"])
            assert dH[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-5, abs=1e-8)
        if mode == "attention":
            numeric_q = np.zeros(4)
            for j in range(4):
                q = params["attn_q"].copy()
                q[j] += eps
                up = f(H, q)
                q[j] -= 2 * eps
                down = f(H, q)
                numeric_q[j] = (up - down) / (2 * eps)
            assert np.allclose(dq, numeric_q, rtol=1e-5, atol=1e-8)


# ---- parameter budget -----------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(dim=8, rank=8)
    with pytest.raises(ValueError):
        EncoderConfig(pooling_mode="max")


def test_trainable_fraction_under_two_percent_with_frozen_embeddings():
    cfg = ModelConfig(freeze_embeddings=True)
    model = PropertyModel(cfg, seed=0)
    trainable, total = model.parameter_counts()
    assert "embed" not in model.trainable_names()
    assert "w0" not in model.trainable_names()
    assert trainable / total < 0.02
