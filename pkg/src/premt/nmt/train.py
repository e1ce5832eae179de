"""Optimization: Adam steps, the training loop and checkpoint selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..bpe import undo_bpe
from ..corpus import BPE_MARKER
from ..eval import bleu
from .model import backward, forward, make_batch
from .params import AdamState, Checkpoint, Seq2SeqParams

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_iterations: int = 1000
    checkpoint_interval: int = 250
    clip_norm: float = 5.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0 or self.clip_norm <= 0:
            raise ValueError("learning_rate must be >= 0 and clip_norm > 0")
        if min(self.batch_size, self.max_iterations, self.checkpoint_interval) < 1:
            raise ValueError("batch_size, max_iterations and checkpoint_interval must be >= 1")


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale ``grads`` in place to global norm ``<= max_norm``; returns the original norm."""
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def adam_update(params: Seq2SeqParams, grads: dict, state: AdamState, config: TrainingConfig) -> None:
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for name, g in grads.items():
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params.tensors[name] -= config.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + config.adam_eps)


def train_step(params: Seq2SeqParams, batch, config: TrainingConfig, state: AdamState | None = None,
               *, batch_index: int = 0, pad: tuple = (3, 3), bos: int = 1, eos: int = 2):
    """One clipped Adam step on ``batch``.

    ``batch`` is either a list of ``(src_ids, tgt_ids)`` pairs or the padded
    arrays from :func:`make_batch`.  Returns ``(loss, params, state)``; the
    parameters are updated in place.
    """
    if isinstance(batch, list):
        if not batch:
            raise ValueError("empty batch")
        batch = make_batch(batch, pad[0], pad[1], bos, eos)
    if state is None:
        state = AdamState.zeros_like(params)
    loss, cache = forward(params, *batch)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss} on batch {batch_index}")
    grads = backward(params, cache)
    clip_gradients(grads, config.clip_norm)
    adam_update(params, grads, state, config)
    return float(loss), params, state


def batches(pairs, batch_size: int, rng: np.random.Generator):
    """Endless stream of shuffled minibatches (reshuffled every epoch)."""
    n = len(pairs)
    while True:
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield [pairs[i] for i in order[start:start + batch_size]]


def train_loop(pairs, config: TrainingConfig, params: Seq2SeqParams, *, src_vocab=(), tgt_vocab=(),
               pad: tuple = (3, 3), callback=None) -> list:
    """Train for ``config.max_iterations`` steps on id-sequence pairs.

    A checkpoint is stored every ``checkpoint_interval`` steps; the list of
    checkpoints is returned.  ``callback(iteration, loss, params)`` may return
    True to stop early (a final checkpoint is then stored).
    """
    if not pairs:
        raise ValueError("no training pairs")
    rng = np.random.default_rng(config.seed)
    state = AdamState.zeros_like(params)
    stream = batches(list(pairs), config.batch_size, rng)
    checkpoints = []
    loss = float("nan")
    for it in range(1, config.max_iterations + 1):
        loss, params, state = train_step(params, next(stream), config, state, batch_index=it - 1, pad=pad)
        stop = bool(callback and callback(it, loss, params))
        if it % config.checkpoint_interval == 0 or (stop and (not checkpoints or checkpoints[-1].iteration != it)):
            checkpoints.append(Checkpoint(params.copy(), it, state.copy(), None,
                                          tuple(src_vocab), tuple(tgt_vocab)))
            log.info("iteration %d loss %.4f (checkpoint %d)", it, loss, len(checkpoints))
        if stop:
            break
    return checkpoints


def select_best(checkpoints, dev_sources, dev_references, translate_fn,
                *, marker: str = BPE_MARKER) -> Checkpoint:
    """Pick the checkpoint with the highest dev BLEU (earliest on ties).

    ``translate_fn(checkpoint, source) -> token sequence`` produces the
    subword-level hypothesis; BLEU is computed after joining subwords.
    Each checkpoint's ``dev_score`` is filled in.
    """
    checkpoints = list(checkpoints)
    if not checkpoints:
        raise ValueError("no checkpoints to select from")
    dev_sources, dev_references = list(dev_sources), list(dev_references)
    if not dev_sources:
        raise ValueError("dev set must be nonempty")
    refs = [undo_bpe(r, marker) for r in dev_references]
    best = None
    for ck in checkpoints:
        hyps = [undo_bpe(translate_fn(ck, s), marker) for s in dev_sources]
        ck.dev_score = bleu(hyps, refs).bleu
        if best is None or ck.dev_score > best.dev_score:
            best = ck
    return best
