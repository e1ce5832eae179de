"""Forward and reverse-mode passes of the attentional encoder-decoder.

Row-vector convention throughout (``x @ W``).  With ``H`` the hidden size:

Gated recurrent cell, for input ``x`` and previous state ``h``::

    z  = sigmoid(x W_z + h U_z + b_z)
    r  = sigmoid(x W_r + h U_r + b_r)
    h~ = tanh(x W_h + (r * h) U_h + b_h)
    h' = (1 - z) * h + z * h~

``W``, ``U`` and ``b`` hold the three blocks side by side (``[z | r | h]``).
Padding positions (mask 0) carry the previous state through unchanged.

Encoder: one cell reads the source left to right, another right to left;
annotation ``j`` is ``[fw_j ; bw_j]`` (size ``2H``).  The decoder starts from
``s_0 = tanh(bw_0 init_W + init_b)``, the right-to-left state after reading
the whole sentence.

Decoder step ``i`` (``y_0 = <s>``)::

    e_ij  = v . tanh(s_{i-1} Ws + a_j Uh)
    alpha = softmax_j(e_i)        (padding excluded)
    c_i   = sum_j alpha_ij a_j
    s_i   = GRU([emb(y_{i-1}) ; c_i], s_{i-1})
    p(y_i) = softmax([s_i ; c_i ; emb(y_{i-1})] out_W + out_b)

The loss is mean token cross-entropy with teacher forcing.
"""

from __future__ import annotations

import numpy as np

from .params import Seq2SeqParams


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def gru_step(ax, h, U, mask=None):
    """One cell update; ``ax = x W + b`` is precomputed by the caller."""
    H = h.shape[1]
    uh = h @ U[:, :2 * H]
    z = sigmoid(ax[:, :H] + uh[:, :H])
    r = sigmoid(ax[:, H:2 * H] + uh[:, H:])
    rh = r * h
    hh = np.tanh(ax[:, 2 * H:] + rh @ U[:, 2 * H:])
    new = h + z * (hh - h)
    if mask is not None:
        new = h + mask[:, None] * (new - h)
    return new, (h, z, r, rh, hh, mask)


def gru_step_backward(dout, cache, U, dU):
    """Returns ``(dh_prev, d_ax)`` and accumulates into ``dU``."""
    h, z, r, rh, hh, mask = cache
    H = h.shape[1]
    if mask is not None:
        m = mask[:, None]
        dnew = dout * m
        dh = dout * (1.0 - m)
    else:
        dnew = dout
        dh = 0.0
    dz = dnew * (hh - h)
    dhh = dnew * z
    dh = dh + dnew * (1.0 - z)
    dah = dhh * (1.0 - hh * hh)
    dU[:, 2 * H:] += rh.T @ dah
    drh = dah @ U[:, 2 * H:].T
    dr = drh * h
    dh = dh + drh * r
    dzr = np.concatenate([dz * z * (1.0 - z), dr * r * (1.0 - r)], axis=1)
    dU[:, :2 * H] += h.T @ dzr
    dh = dh + dzr @ U[:, :2 * H].T
    return dh, np.concatenate([dzr, dah], axis=1)


def encode_batch(p: Seq2SeqParams, src, src_mask):
    """Annotations ``[B, S, 2H]`` plus what the backward pass needs."""
    B, S = src.shape
    H = p.dims.hidden_dim
    emb = p["src_emb"][src]
    ax_f = emb @ p["enc_fw_W"] + p["enc_fw_b"]
    ax_b = emb @ p["enc_bw_W"] + p["enc_bw_b"]
    fw = np.zeros((B, S, H))
    bw = np.zeros((B, S, H))
    caches_f, caches_b = [None] * S, [None] * S
    h = np.zeros((B, H))
    for t in range(S):
        h, caches_f[t] = gru_step(ax_f[:, t], h, p["enc_fw_U"], src_mask[:, t])
        fw[:, t] = h
    h = np.zeros((B, H))
    for t in range(S - 1, -1, -1):
        h, caches_b[t] = gru_step(ax_b[:, t], h, p["enc_bw_U"], src_mask[:, t])
        bw[:, t] = h
    annotations = np.concatenate([fw, bw], axis=2)
    return annotations, (emb, caches_f, caches_b)


def encode(p: Seq2SeqParams, source_ids) -> np.ndarray:
    """Annotations ``[J, 2H]`` for one unpadded id sequence."""
    ids = np.asarray(source_ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("encode needs a nonempty id sequence")
    if ids.min() < 0 or ids.max() >= p.dims.src_vocab:
        raise ValueError("source id outside the vocabulary")
    ann, _ = encode_batch(p, ids[None, :], np.ones((1, ids.size)))
    return ann[0]


def initial_state(p: Seq2SeqParams, annotations):
    H = p.dims.hidden_dim
    return np.tanh(annotations[:, 0, H:] @ p["init_W"] + p["init_b"])


def attend_batch(p: Seq2SeqParams, query, annotations, proj, src_mask):
    """Context ``[B, 2H]``, weights ``[B, S]`` and cached activations."""
    t = np.tanh(proj + (query @ p["att_Ws"])[:, None, :])
    scores = t @ p["att_v"]
    scores = np.where(src_mask > 0, scores, -np.inf)
    scores = scores - scores.max(axis=1, keepdims=True)
    w = np.exp(scores)
    w /= w.sum(axis=1, keepdims=True)
    ctx = np.einsum("bs,bsk->bk", w, annotations)
    return ctx, w, t


def attend(p: Seq2SeqParams, decoder_state, annotations):
    """Single-sentence attention: returns ``(context, weight_row)``."""
    ann = np.asarray(annotations)[None]
    proj = ann @ p["att_Uh"]
    ctx, w, _ = attend_batch(p, np.asarray(decoder_state)[None], ann, proj, np.ones(ann.shape[:2]))
    return ctx[0], w[0]


def forward(p: Seq2SeqParams, src, src_mask, tgt_in, tgt_out, tgt_mask, *, keep_cache=True):
    """Teacher-forced loss on a padded batch; returns ``(loss, cache)``."""
    E, H = p.dims.embed_dim, p.dims.hidden_dim
    B, T = tgt_in.shape
    ann, enc_cache = encode_batch(p, src, src_mask)
    proj = ann @ p["att_Uh"]
    s0 = initial_state(p, ann)
    emb_t = p["tgt_emb"][tgt_in]
    ax_emb = emb_t @ p["dec_W"][:E] + p["dec_b"]
    dec_Wc = p["dec_W"][E:]
    states = np.zeros((B, T, H))
    ctxs = np.zeros((B, T, 2 * H))
    steps = []
    s = s0
    for i in range(T):
        ctx, w, tt = attend_batch(p, s, ann, proj, src_mask)
        s_prev = s
        s, gcache = gru_step(ax_emb[:, i] + ctx @ dec_Wc, s_prev, p["dec_U"])
        states[:, i] = s
        ctxs[:, i] = ctx
        steps.append((s_prev, w, tt, gcache))
    readout = np.concatenate([states, ctxs, emb_t], axis=2)
    logits = readout @ p["out_W"] + p["out_b"]
    logits -= logits.max(axis=2, keepdims=True)
    logz = np.log(np.exp(logits).sum(axis=2, keepdims=True))
    logp = logits - logz
    picked = np.take_along_axis(logp, tgt_out[:, :, None], axis=2)[:, :, 0]
    n_tok = tgt_mask.sum()
    loss = -(picked * tgt_mask).sum() / n_tok
    if not keep_cache:
        return loss, None
    cache = dict(src=src, src_mask=src_mask, tgt_in=tgt_in, tgt_out=tgt_out, tgt_mask=tgt_mask,
                 ann=ann, enc=enc_cache, proj=proj, s0=s0, emb_t=emb_t, states=states,
                 ctxs=ctxs, steps=steps, readout=readout, logp=logp, n_tok=n_tok)
    return loss, cache


def backward(p: Seq2SeqParams, cache) -> dict:
    """Exact gradients of the loss returned by :func:`forward`."""
    E, H = p.dims.embed_dim, p.dims.hidden_dim
    g = {k: np.zeros_like(v) for k, v in p.items()}
    src = cache["src"]
    tgt_in, tgt_out, tgt_mask = cache["tgt_in"], cache["tgt_out"], cache["tgt_mask"]
    ann, proj = cache["ann"], cache["proj"]
    B, T = tgt_in.shape
    S = src.shape[1]

    # output layer
    dlogits = np.exp(cache["logp"])
    np.put_along_axis(dlogits, tgt_out[:, :, None],
                      np.take_along_axis(dlogits, tgt_out[:, :, None], axis=2) - 1.0, axis=2)
    dlogits *= (tgt_mask / cache["n_tok"])[:, :, None]
    readout = cache["readout"]
    g["out_W"] += readout.reshape(-1, readout.shape[2]).T @ dlogits.reshape(-1, dlogits.shape[2])
    g["out_b"] += dlogits.sum(axis=(0, 1))
    dread = dlogits @ p["out_W"].T
    dstates = dread[:, :, :H]
    dctxs = dread[:, :, H:3 * H]
    demb_t = dread[:, :, 3 * H:].copy()

    # decoder recurrence
    dec_Wc = p["dec_W"][E:]
    dax_all = np.zeros((B, T, 3 * H))
    dann = np.zeros_like(ann)
    dproj = np.zeros_like(proj)
    ds = np.zeros((B, H))
    for i in range(T - 1, -1, -1):
        s_prev, w, tt, gcache = cache["steps"][i]
        ds = ds + dstates[:, i]
        ds_prev, dax = gru_step_backward(ds, gcache, p["dec_U"], g["dec_U"])
        dax_all[:, i] = dax
        dctx = dctxs[:, i] + dax @ dec_Wc.T
        # attention
        dw = np.einsum("bk,bsk->bs", dctx, ann)
        dann += w[:, :, None] * dctx[:, None, :]
        de = w * (dw - (w * dw).sum(axis=1, keepdims=True))
        g["att_v"] += np.einsum("bs,bsa->a", de, tt)
        dpre = (de[:, :, None] * p["att_v"]) * (1.0 - tt * tt)
        dproj += dpre
        dq = dpre.sum(axis=1)
        g["att_Ws"] += s_prev.T @ dq
        ds = ds_prev + dq @ p["att_Ws"].T
    ax_in = np.concatenate([cache["emb_t"], cache["ctxs"]], axis=2)
    g["dec_W"] += ax_in.reshape(-1, E + 2 * H).T @ dax_all.reshape(-1, 3 * H)
    g["dec_b"] += dax_all.sum(axis=(0, 1))
    demb_t += dax_all @ p["dec_W"][:E].T
    np.add.at(g["tgt_emb"], tgt_in.ravel(), demb_t.reshape(-1, E))

    # initial decoder state
    s0 = cache["s0"]
    ds0 = ds * (1.0 - s0 * s0)
    bw0 = ann[:, 0, H:]
    g["init_W"] += bw0.T @ ds0
    g["init_b"] += ds0.sum(axis=0)
    dann[:, 0, H:] += ds0 @ p["init_W"].T

    g["att_Uh"] += ann.reshape(-1, 2 * H).T @ dproj.reshape(-1, dproj.shape[2])
    dann += dproj @ p["att_Uh"].T

    # encoder
    emb, caches_f, caches_b = cache["enc"]
    dax_f = np.zeros((B, S, 3 * H))
    dax_b = np.zeros((B, S, 3 * H))
    dh = np.zeros((B, H))
    for t in range(S - 1, -1, -1):
        dh, dax_f[:, t] = gru_step_backward(dh + dann[:, t, :H], caches_f[t], p["enc_fw_U"], g["enc_fw_U"])
    dh = np.zeros((B, H))
    for t in range(S):
        dh, dax_b[:, t] = gru_step_backward(dh + dann[:, t, H:], caches_b[t], p["enc_bw_U"], g["enc_bw_U"])
    emb2 = emb.reshape(-1, E)
    g["enc_fw_W"] += emb2.T @ dax_f.reshape(-1, 3 * H)
    g["enc_fw_b"] += dax_f.sum(axis=(0, 1))
    g["enc_bw_W"] += emb2.T @ dax_b.reshape(-1, 3 * H)
    g["enc_bw_b"] += dax_b.sum(axis=(0, 1))
    demb = dax_f @ p["enc_fw_W"].T + dax_b @ p["enc_bw_W"].T
    np.add.at(g["src_emb"], src.ravel(), demb.reshape(-1, E))
    return g


def loss_and_grads(p: Seq2SeqParams, batch):
    loss, cache = forward(p, *batch)
    return loss, backward(p, cache)


def make_batch(pairs, src_pad: int, tgt_pad: int, bos: int, eos: int):
    """Pad ``[(src_ids, tgt_ids)]`` into arrays for :func:`forward`.

    Targets get ``<s>`` prepended on the input side and ``</s>`` appended on
    the output side.
    """
    B = len(pairs)
    S = max(len(s) for s, _ in pairs)
    T = max(len(t) for _, t in pairs) + 1
    src = np.full((B, S), src_pad, dtype=np.int64)
    src_mask = np.zeros((B, S))
    tgt_in = np.full((B, T), tgt_pad, dtype=np.int64)
    tgt_out = np.full((B, T), tgt_pad, dtype=np.int64)
    tgt_mask = np.zeros((B, T))
    for b, (s, t) in enumerate(pairs):
        if len(s) == 0:
            raise ValueError("empty source sequence in batch")
        src[b, :len(s)] = s
        src_mask[b, :len(s)] = 1.0
        tgt_in[b, 0] = bos
        tgt_in[b, 1:len(t) + 1] = t
        tgt_out[b, :len(t)] = t
        tgt_out[b, len(t)] = eos
        tgt_mask[b, :len(t) + 1] = 1.0
    return src, src_mask, tgt_in, tgt_out, tgt_mask
