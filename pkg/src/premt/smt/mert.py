"""Minimum error rate training over accumulated n-best lists.

Each round decodes the dev set, merges the n-best lists into a growing
pool, then runs coordinate ascent where every coordinate update is an
exact line search: along one weight, each candidate's score is linear, so
the 1-best per sentence changes only at the breakpoints of the upper
envelope of those lines.  The objective is corpus BLEU with add-one
smoothing on the n > 1 precisions.
"""

from __future__ import annotations

import logging

import numpy as np

from ..eval import bleu_from_stats, sentence_stats
from .decoder import LogLinearWeights, decode

log = logging.getLogger(__name__)


class NBestPool:
    """Per-sentence candidate pool: feature matrix + BLEU statistics."""

    def __init__(self, references):
        self.references = [tuple(r) for r in references]
        self.feats = [np.zeros((0, 0)) for _ in self.references]
        self.stats = [np.zeros((0, 10), dtype=np.int64) for _ in self.references]
        self._seen = [set() for _ in self.references]

    def add(self, idx: int, nbest) -> int:
        added = 0
        rows, stats = [], []
        for target, _, feats in nbest:
            if target in self._seen[idx]:
                continue
            self._seen[idx].add(target)
            rows.append(feats)
            stats.append(sentence_stats(target, self.references[idx]))
            added += 1
        if rows:
            new = np.asarray(rows, dtype=np.float64)
            self.feats[idx] = new if self.feats[idx].size == 0 else np.vstack([self.feats[idx], new])
            self.stats[idx] = np.vstack([self.stats[idx], np.asarray(stats)])
        return added

    def best_stats(self, weights: np.ndarray) -> np.ndarray:
        total = np.zeros(10, dtype=np.int64)
        for f, s in zip(self.feats, self.stats):
            if len(f):
                total += s[int(np.argmax(f @ weights))]
        return total

    def score(self, weights: np.ndarray) -> float:
        return bleu_from_stats(self.best_stats(weights), smooth=True).bleu


def _envelope(slopes: np.ndarray, intercepts: np.ndarray):
    """Upper envelope of lines ``a + b * x``.

    Returns ``(breakpoints, winners)`` where ``winners[k]`` is the argmax on
    the k-th interval delimited by the sorted ``breakpoints``.
    """
    order = sorted(range(len(slopes)), key=lambda i: (slopes[i], intercepts[i]))
    hull, xs = [], []
    for i in order:
        b, a = slopes[i], intercepts[i]
        if hull and slopes[hull[-1]] == b:
            # equal slope: the later one has the larger intercept
            hull.pop()
            if xs:
                xs.pop()
        while hull:
            j = hull[-1]
            x = (intercepts[j] - a) / (b - slopes[j])
            if xs and x <= xs[-1]:
                hull.pop()
                xs.pop()
            else:
                xs.append(x)
                break
        hull.append(i)
        if len(hull) == 1:
            xs = []
    return xs, hull


def line_search(pool: NBestPool, weights: np.ndarray, dim: int):
    """Exact maximization of the pool objective along coordinate ``dim``.

    Returns ``(best_value, best_bleu)``.
    """
    events = []
    base = np.zeros(10, dtype=np.int64)
    for f, s in zip(pool.feats, pool.stats):
        if not len(f):
            continue
        slopes = f[:, dim]
        intercepts = f @ weights - weights[dim] * slopes
        xs, winners = _envelope(slopes, intercepts)
        base += s[winners[0]]
        for x, prev, cur in zip(xs, winners, winners[1:]):
            events.append((x, s[cur] - s[prev]))
    events.sort(key=lambda e: e[0])
    current = weights[dim]
    if not events:
        return current, bleu_from_stats(base, smooth=True).bleu
    xs = [e[0] for e in events]
    stats = base.copy()
    best_bleu = bleu_from_stats(stats, smooth=True).bleu
    best_x = xs[0] - 1.0
    k = 0
    while k < len(events):
        x = xs[k]
        while k < len(events) and xs[k] == x:
            stats = stats + events[k][1]
            k += 1
        hi = xs[k] if k < len(events) else x + 2.0
        cand = 0.5 * (x + hi)
        b = bleu_from_stats(stats, smooth=True).bleu
        if b > best_bleu + 1e-12 or (abs(b - best_bleu) <= 1e-12 and abs(cand - current) < abs(best_x - current)):
            best_bleu, best_x = b, cand
    # stay put if the current value already sits in an optimal interval
    if pool.score(weights) >= best_bleu - 1e-12:
        return current, pool.score(weights)
    return best_x, best_bleu


def optimize(pool: NBestPool, start: np.ndarray, max_sweeps: int = 20):
    w = start.copy()
    best = pool.score(w)
    for _ in range(max_sweeps):
        improved = False
        for d in range(len(w)):
            x, b = line_search(pool, w, d)
            if b > best + 1e-12:
                w[d] = x
                best = b
                improved = True
        if not improved:
            break
    return w, best


def tune_weights(dev, table, lm, initial: LogLinearWeights, rounds: int = 5, *,
                 nbest: int = 100, restarts: int = 3, beam_size: int | None = 100,
                 distortion_limit: int | None = 6, seed: int = 0,
                 history: list | None = None) -> LogLinearWeights:
    """Tune log-linear weights on ``dev`` (a parallel corpus).

    Returns the weights whose actual 1-best dev decoding scored highest
    among all weights decoded (the initial weights included; earliest wins
    ties).  ``history`` collects ``(weights, dev_bleu)`` per decode.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    pairs = list(dev)
    if not pairs:
        raise ValueError("dev set must be nonempty")
    rng = np.random.default_rng(seed)
    pool = NBestPool([t for _, t in pairs])
    current = initial.as_array()
    observed = []

    def decode_all(w):
        weights = initial.replace(w)
        stats = np.zeros(10, dtype=np.int64)
        new = 0
        for idx, (src, ref) in enumerate(pairs):
            res = decode(src, table, lm, weights, beam_size, distortion_limit, nbest=nbest)
            stats += sentence_stats(res.translation, ref)
            new += pool.add(idx, res.nbest)
        score = bleu_from_stats(stats, smooth=True).bleu
        observed.append((weights, score))
        if history is not None:
            history.append((weights, score))
        return new

    for r in range(rounds):
        new = decode_all(current)
        log.info("mert round %d: dev bleu %.4f, %d new candidates", r, observed[-1][1], new)
        if r > 0 and new == 0:
            break
        starts = [current] + [current + rng.normal(0.0, 0.5, size=len(current))
                              for _ in range(restarts)]
        results = [optimize(pool, s) for s in starts]
        current = max(results, key=lambda t: t[1])[0]
        scale = np.max(np.abs(current))
        if scale > 0:
            current = current / scale
    if not any(np.array_equal(current, w.as_array()) for w, _ in observed):
        decode_all(current)
    best_w, best_score = observed[0]
    for w, s in observed[1:]:
        if s > best_score:
            best_w, best_score = w, s
    return best_w
