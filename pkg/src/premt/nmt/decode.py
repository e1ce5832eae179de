"""Beam search and ensemble decoding."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .model import attend_batch, encode_batch, gru_step, initial_state
from .params import Seq2SeqParams


class Translation(NamedTuple):
    ids: tuple
    attention: np.ndarray   # [len(ids) + 1, source length]; last row is the </s> step
    score: float            # log-probability divided by len(ids) + 1


class _State:
    """Per-model decoder state for a batch of K live hypotheses."""

    def __init__(self, p: Seq2SeqParams, source_ids):
        src = np.asarray(source_ids, dtype=np.int64)[None, :]
        mask = np.ones(src.shape)
        self.p = p
        self.ann, _ = encode_batch(p, src, mask)
        self.proj = self.ann @ p["att_Uh"]
        self.mask = mask
        self.s = initial_state(p, self.ann)

    def step(self, prev_ids):
        """Advance every live hypothesis; returns ``(probs [K, V], attn [K, S])``."""
        p = self.p
        E = p.dims.embed_dim
        K = len(prev_ids)
        ann = np.broadcast_to(self.ann, (K,) + self.ann.shape[1:])
        proj = np.broadcast_to(self.proj, (K,) + self.proj.shape[1:])
        mask = np.broadcast_to(self.mask, (K, self.mask.shape[1]))
        ctx, w, _ = attend_batch(p, self.s, ann, proj, mask)
        emb = p["tgt_emb"][np.asarray(prev_ids)]
        ax = emb @ p["dec_W"][:E] + ctx @ p["dec_W"][E:] + p["dec_b"]
        self.s, _ = gru_step(ax, self.s, p["dec_U"])
        logits = np.concatenate([self.s, ctx, emb], axis=1) @ p["out_W"] + p["out_b"]
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        return probs, w

    def select(self, rows):
        self.s = self.s[rows]


def translate(models: Seq2SeqParams | Sequence[Seq2SeqParams], source_ids, beam_size: int = 5,
              max_len: int = 50, *, bos: int = 1, eos: int = 2) -> Translation:
    """Beam search; an ensemble averages the members' per-step distributions.

    At most ``max_len`` tokens are generated before ``</s>``; after that
    ``</s>`` is forced.  Finished hypotheses are ranked by log-probability
    divided by their length including ``</s>``.  ``beam_size=1`` is greedy
    decoding.  Attention rows are averaged over ensemble members.
    """
    if isinstance(models, Seq2SeqParams):
        models = [models]
    models = list(models)
    if not models:
        raise ValueError("need at least one model")
    if beam_size < 1 or max_len < 1:
        raise ValueError("beam_size and max_len must be >= 1")
    source_ids = list(source_ids)
    if not source_ids:
        raise ValueError("empty source sequence")
    states = [_State(p, source_ids) for p in models]
    V = models[0].dims.tgt_vocab

    prefixes = [()]
    scores = np.zeros(1)
    attns = [[]]
    last = [bos]
    finished = []
    for t in range(max_len + 1):
        outs = [st.step(last) for st in states]
        if len(outs) == 1:
            probs, att = outs[0]
        else:
            probs = sum(o[0] for o in outs) / len(outs)
            att = sum(o[1] for o in outs) / len(outs)
        with np.errstate(divide="ignore"):
            logp = np.log(probs)
        if t == max_len:
            forced = np.full_like(logp, -np.inf)
            forced[:, eos] = logp[:, eos]
            logp = forced
        cand = (scores[:, None] + logp).ravel()
        width = beam_size - len(finished)
        order = np.argsort(-cand, kind="stable")[:width]
        rows, new_prefixes, new_scores, new_attns, new_last = [], [], [], [], []
        for flat in order:
            k, tok = divmod(int(flat), V)
            if not np.isfinite(cand[flat]):
                continue
            row_att = attns[k] + [att[k]]
            if tok == eos:
                n = len(prefixes[k]) + 1
                finished.append(Translation(prefixes[k], np.array(row_att), float(cand[flat]) / n))
            else:
                rows.append(k)
                new_prefixes.append(prefixes[k] + (tok,))
                new_scores.append(cand[flat])
                new_attns.append(row_att)
                new_last.append(tok)
        if not rows:
            break
        for st in states:
            st.select(rows)
        prefixes, scores, attns, last = new_prefixes, np.array(new_scores), new_attns, new_last
    best = max(finished, key=lambda h: h.score)
    return best


def greedy(p: Seq2SeqParams, source_ids, max_len: int = 50, *, bos: int = 1, eos: int = 2) -> tuple:
    """Argmax decoding, written independently of the beam search."""
    st = _State(p, source_ids)
    out = []
    prev = bos
    for _ in range(max_len):
        probs, _ = st.step([prev])
        tok = int(np.argmax(probs[0]))
        if tok == eos:
            break
        out.append(tok)
        prev = tok
    return tuple(out)
