import itertools
import math

import numpy as np
import pytest

from premt.nmt import (AttentionNMT, Checkpoint, Dims, Seq2SeqParams, TrainingConfig, TrainingError,
                       attend, encode, forward, gradient_check, greedy, make_batch,
                       random_check_params, select_best, train_loop, train_step, translate)
from premt.nmt.params import tensor_shapes

BOS, EOS, PAD = 1, 2, 3


def random_model(seed, src_vocab=8, tgt_vocab=6, embed=4, hidden=5, scale=1.0):
    return random_check_params(Dims(src_vocab, tgt_vocab, embed, hidden), seed=seed, scale=scale)


def seq_logprob(p, src, tgt):
    loss, _ = forward(p, *make_batch([(src, tgt)], PAD, PAD, BOS, EOS), keep_cache=False)
    return -loss * (len(tgt) + 1)


# -- encoder ------------------------------------------------------------------------

def test_encode_shape():
    p = random_model(0)
    assert encode(p, [4]).shape == (1, 2 * p.dims.hidden_dim)
    with pytest.raises(ValueError):
        encode(p, [])


def test_reversal_symmetry_with_tied_directions():
    p = random_model(1)
    for part in ("W", "U", "b"):
        p.tensors[f"enc_bw_{part}"] = p[f"enc_fw_{part}"].copy()
    H = p.dims.hidden_dim
    ids = [4, 5, 6, 7, 4]
    a = encode(p, ids)
    b = encode(p, ids[::-1])[::-1]
    np.testing.assert_allclose(a[:, :H], b[:, H:], atol=1e-12)
    np.testing.assert_allclose(a[:, H:], b[:, :H], atol=1e-12)


def hand_gru(x, h, W, U, b):
    """Scalar-loop gated recurrent update, independent of the vectorized code."""
    H = len(h)
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))  # noqa: E731
    pre = [sum(x[i] * W[i][k] for i in range(len(x))) + b[k] for k in range(3 * H)]
    z = [sig(pre[k] + sum(h[i] * U[i][k] for i in range(H))) for k in range(H)]
    r = [sig(pre[H + k] + sum(h[i] * U[i][H + k] for i in range(H))) for k in range(H)]
    hh = [math.tanh(pre[2 * H + k] + sum(r[i] * h[i] * U[i][2 * H + k] for i in range(H)))
          for k in range(H)]
    return [(1 - z[k]) * h[k] + z[k] * hh[k] for k in range(H)]


def test_encoder_matches_hand_recurrence():
    dims = Dims(5, 5, 2, 2)
    grid = np.linspace(-1, 1, 64)
    tensors = {}
    k = 0
    for name, shape in tensor_shapes(dims).items():
        n = int(np.prod(shape))
        tensors[name] = np.resize(np.roll(grid, k), n).reshape(shape)
        k += 7
    p = Seq2SeqParams(dims, tensors)
    ids = [4, 1, 3]
    emb = [list(p["src_emb"][i]) for i in ids]
    fw, h = [], [0.0, 0.0]
    for x in emb:
        h = hand_gru(x, h, p["enc_fw_W"].tolist(), p["enc_fw_U"].tolist(), p["enc_fw_b"].tolist())
        fw.append(h)
    bw, h = [None] * 3, [0.0, 0.0]
    for j in (2, 1, 0):
        h = hand_gru(emb[j], h, p["enc_bw_W"].tolist(), p["enc_bw_U"].tolist(), p["enc_bw_b"].tolist())
        bw[j] = h
    expected = np.array([f + b for f, b in zip(fw, bw)])
    np.testing.assert_allclose(encode(p, ids), expected, atol=1e-12)


# -- attention ------------------------------------------------------------------------

def test_attention_single_position():
    p = random_model(2)
    ann = encode(p, [5])
    _, w = attend(p, np.ones(p.dims.hidden_dim), ann)
    assert w.tolist() == [1.0]


def test_attention_uniform_on_identical_annotations():
    p = random_model(3)
    row = encode(p, [5])[0]
    ctx, w = attend(p, np.ones(p.dims.hidden_dim), np.stack([row] * 4))
    np.testing.assert_allclose(w, 0.25, atol=1e-15)
    np.testing.assert_allclose(ctx, row, atol=1e-12)


def test_attention_two_positions_closed_form():
    p = random_model(4)
    ann = encode(p, [4, 6])
    s = np.linspace(-1, 1, p.dims.hidden_dim)
    e = [float(p["att_v"] @ np.tanh(s @ p["att_Ws"] + a @ p["att_Uh"])) for a in ann]
    first = 1.0 / (1.0 + math.exp(e[1] - e[0]))
    ctx, w = attend(p, s, ann)
    assert abs(w[0] - first) < 1e-12 and abs(w[1] - (1 - first)) < 1e-12
    np.testing.assert_allclose(ctx, first * ann[0] + (1 - first) * ann[1], atol=1e-12)


# -- training ---------------------------------------------------------------------------

def test_initial_loss_near_uniform():
    dims = Dims(12, 40, 8, 16)
    p = Seq2SeqParams.initialize(dims, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    pairs = [(list(rng.integers(4, 12, 5)), list(rng.integers(4, 40, 6))) for _ in range(8)]
    loss, _ = forward(p, *make_batch(pairs, PAD, PAD, BOS, EOS), keep_cache=False)
    assert abs(loss - math.log(40)) <= 0.1 * math.log(40)


def test_zero_learning_rate_changes_nothing():
    p = Seq2SeqParams.initialize(Dims(8, 8, 4, 4), np.random.default_rng(0))
    before = p.copy()
    train_step(p, [([4, 5], [6, 7])], TrainingConfig(learning_rate=0.0))
    for name, arr in p.items():
        assert np.array_equal(arr, before[name])


def test_single_pair_overfits():
    p = Seq2SeqParams.initialize(Dims(10, 10, 16, 32), np.random.default_rng(0))
    cfg = TrainingConfig(learning_rate=1e-2)
    state, loss = None, None
    pair = [([4, 5, 6, 7], [9, 8, 7, 6, 5])]
    for _ in range(500):
        loss, p, state = train_step(p, pair, cfg, state)
        if loss < 0.05:
            break
    assert loss < 0.05


def test_nonfinite_loss_reports_batch():
    p = Seq2SeqParams.initialize(Dims(8, 8, 4, 4), np.random.default_rng(0))
    p.tensors["out_b"][:] = np.nan
    with pytest.raises(TrainingError, match="batch 7"):
        train_step(p, [([4], [5])], TrainingConfig(), batch_index=7)


def test_checkpoint_count_and_determinism():
    rng = np.random.default_rng(0)
    pairs = [(list(rng.integers(4, 8, 3)), list(rng.integers(4, 8, 3))) for _ in range(10)]
    cfg = TrainingConfig(batch_size=4, max_iterations=30, checkpoint_interval=10, seed=5)
    runs = []
    for _ in range(2):
        p = Seq2SeqParams.initialize(Dims(8, 8, 4, 4), np.random.default_rng(1))
        runs.append(train_loop(pairs, cfg, p))
    assert [c.iteration for c in runs[0]] == [10, 20, 30]
    assert [c.to_bytes() for c in runs[0]] == [c.to_bytes() for c in runs[1]]


def test_callback_stops_early():
    p = Seq2SeqParams.initialize(Dims(8, 8, 4, 4), np.random.default_rng(1))
    cks = train_loop([([4], [5])], TrainingConfig(max_iterations=100, checkpoint_interval=50), p,
                     callback=lambda it, loss, params: it == 7)
    assert [c.iteration for c in cks] == [7]


def fake_checkpoints(n):
    base = random_model(0)
    return [Checkpoint(base, i) for i in range(n)]


def test_select_best_examples():
    refs = [("a", "b", "c", "d")]
    outputs = {0: ("x",), 1: ("a", "b", "c", "d"), 2: ("a", "b", "x", "y")}
    cks = fake_checkpoints(3)
    assert select_best(cks, [("s",)], refs, lambda ck, s: outputs[ck.iteration]) is cks[1]
    (only,) = fake_checkpoints(1)
    assert select_best([only], [("s",)], refs, lambda ck, s: ("x",)) is only
    tied = fake_checkpoints(2)
    assert select_best(tied, [("s",)], refs, lambda ck, s: ("a",)) is tied[0]


def test_select_best_joins_subwords():
    cks = fake_checkpoints(2)
    outs = {0: ("ab", "c", "d", "e"), 1: ("a@@", "b", "c", "d", "e")}
    best = select_best(cks, [("s",)], [("ab", "c", "d", "e")], lambda ck, s: outs[ck.iteration])
    assert best is cks[0] and cks[1].dev_score == cks[0].dev_score == 1.0


# -- gradient check ------------------------------------------------------------------

def test_gradcheck_small_model():
    p = random_check_params(Dims(7, 7, 3, 4), seed=0)
    report = gradient_check(p, [([4, 5, 6], [5, 6]), ([6, 4], [4, 5, 6])], samples_per_tensor=30)
    assert report.passed, report.summary()
    assert report.worst < 1e-4


def test_unused_embedding_row_has_zero_gradient():
    from premt.nmt import backward
    p = random_check_params(Dims(7, 7, 3, 4), seed=1)
    _, cache = forward(p, *make_batch([([4, 5], [4])], PAD, PAD, BOS, EOS))
    grads = backward(p, cache)
    assert np.all(grads["src_emb"][6] == 0.0)
    assert np.all(grads["tgt_emb"][6] == 0.0)


def test_gradcheck_infinite_tolerance_passes():
    p = random_check_params(Dims(7, 7, 3, 4), seed=2)
    p.tensors["out_W"] *= 1e3   # poor conditioning; the bound is vacuous anyway
    assert gradient_check(p, ([4], [5]), tolerance=math.inf, samples_per_tensor=5).passed


# -- decoding ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_beam_one_is_greedy(seed):
    p = random_model(seed)
    src = [4 + (seed + i) % 4 for i in range(1 + seed % 4)]
    assert translate(p, src, beam_size=1, max_len=6).ids == greedy(p, src, max_len=6)


@pytest.mark.parametrize("seed", range(5))
def test_identical_ensemble_equals_single(seed):
    p = random_model(seed)
    one = translate(p, [4, 5, 6], beam_size=3, max_len=5)
    many = translate([p, p.copy(), p.copy()], [4, 5, 6], beam_size=3, max_len=5)
    assert one.ids == many.ids
    assert abs(one.score - many.score) < 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_exhaustive_search_oracle(seed):
    p = random_model(seed, tgt_vocab=6, scale=1.5)
    src = [4, 5, 7][: 1 + seed % 3]
    V, max_len = p.dims.tgt_vocab, 2
    tokens = [t for t in range(V) if t != EOS]
    best, best_score = None, -math.inf
    for n in range(max_len + 1):
        for y in itertools.product(tokens, repeat=n):
            s = seq_logprob(p, src, list(y)) / (n + 1)
            if s > best_score:
                best, best_score = y, s
    out = translate(p, src, beam_size=V ** 3, max_len=max_len)
    assert out.ids == best
    assert abs(out.score - best_score) < 1e-10


def test_attention_rows_shape_and_sum():
    p = random_model(9)
    out = translate(p, [4, 5, 6, 7], beam_size=4, max_len=5)
    assert out.attention.shape == (len(out.ids) + 1, 4)
    np.testing.assert_allclose(out.attention.sum(axis=1), 1.0, atol=1e-12)
    assert (out.attention >= 0).all()


def test_translate_argument_errors():
    p = random_model(0)
    with pytest.raises(ValueError):
        translate(p, [], beam_size=2)
    with pytest.raises(ValueError):
        translate(p, [4], beam_size=0)
    with pytest.raises(ValueError):
        translate([], [4])


# -- checkpoints ------------------------------------------------------------------------

def test_checkpoint_bytes_round_trip(tmp_path):
    p = random_model(3)
    from premt.nmt import AdamState
    state = AdamState.zeros_like(p)
    state.step = 4
    ck = Checkpoint(p, 12, state, 0.25, ("a", "b"), ("c",))
    path = tmp_path / "ck.bin"
    ck.save(path)
    again = Checkpoint.load(path)
    assert again.to_bytes() == ck.to_bytes()
    assert path.read_bytes()[:8] == b"PREMTNMT"
    assert again.iteration == 12 and again.dev_score == 0.25 and again.optimizer.step == 4
    assert translate(again.params, [4, 5], 3, 5).ids == translate(p, [4, 5], 3, 5).ids


def test_checkpoint_rejects_garbage():
    with pytest.raises(ValueError):
        Checkpoint.from_bytes(b"not a checkpoint")


# -- estimator ---------------------------------------------------------------------------

COPY_DATA = [(("a", "b"), ("A", "B")), (("b", "a"), ("B", "A")), (("a",), ("A",)),
             (("b", "b"), ("B", "B")), (("a", "a", "b"), ("A", "A", "B"))]


def fitted_copy_model(**kw):
    params = dict(embed_dim=8, hidden_dim=16, learning_rate=1e-2, batch_size=5,
                  max_iterations=300, checkpoint_interval=100) | kw
    return AttentionNMT(**params).fit([s for s, _ in COPY_DATA], [t for _, t in COPY_DATA])


def test_estimator_learns_tiny_mapping():
    model = fitted_copy_model()
    assert model.predict([s for s, _ in COPY_DATA]) == [t for _, t in COPY_DATA]
    assert len(model.checkpoints_) == 3


def test_estimator_save_and_rebuild(tmp_path):
    model = fitted_copy_model()
    model.save(tmp_path / "m.bin")
    again = AttentionNMT.from_checkpoints([Checkpoint.load(tmp_path / "m.bin")], max_len=None)
    assert again.predict([("a", "b")]) == model.predict([("a", "b")])


def test_estimator_ensemble_of_identical_checkpoints():
    model = fitted_copy_model()
    ck = model.best_
    single = AttentionNMT.from_checkpoints([ck])
    ens = AttentionNMT.from_checkpoints([ck, ck, ck, ck], ensemble=4)
    sents = [s for s, _ in COPY_DATA]
    assert ens.predict(sents) == single.predict(sents)


def test_estimator_with_subwords():
    data = [(("abab",), ("xyxy",)), (("ab",), ("xy",)), (("abab", "ab"), ("xyxy", "xy"))]
    model = AttentionNMT(embed_dim=8, hidden_dim=16, learning_rate=1e-2, batch_size=3,
                         max_iterations=300, checkpoint_interval=300, bpe_merges=4)
    model.fit([s for s, _ in data], [t for _, t in data])
    assert model.merges_ is not None and len(model.merges_) > 0
    units, attention, _ = model.translate(("abab",))
    assert attention.shape == (len(units) + 1, len(model.segment([("abab",)])[0]))
    assert all(len(p) == 1 for p in model.predict([("ab",)]))


def test_estimator_params_interface():
    model = AttentionNMT(hidden_dim=8)
    assert model.get_params()["hidden_dim"] == 8
    assert model.set_params(ensemble=4).ensemble == 4
