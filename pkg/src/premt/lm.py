"""Word n-gram language model with interpolated absolute discounting.

For an n-gram context ``h`` with continuation count ``c(h) > 0``::

    p(w | h) = max(c(h, w) - D, 0) / c(h) + D * N1+(h .) / c(h) * p(w | h')

where ``h'`` drops the oldest word of ``h``.  Unseen contexts defer to
``h'`` entirely.  The unigram level interpolates with a uniform
distribution over the training types plus ``<unk>`` and ``</s>``.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import BOS, EOS, UNK

HEADER_PREFIX = "#premt-lm v1"


class NGramModel:
    """Counts-backed n-gram model.  Immutable after construction."""

    def __init__(self, order: int, counts: dict, discount: float = 0.75):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not 0.0 <= discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        self.order = order
        self.discount = discount
        self.counts = {tuple(k): int(v) for k, v in counts.items()}
        ctx_total = Counter()
        ctx_types = Counter()
        for gram, c in self.counts.items():
            if len(gram) > order:
                raise ValueError(f"n-gram longer than model order: {gram}")
            ctx_total[gram[:-1]] += c
            ctx_types[gram[:-1]] += 1
        self._ctx_total = dict(ctx_total)
        self._ctx_types = dict(ctx_types)
        self.vocab = frozenset(g[0] for g in self.counts if len(g) == 1) | {UNK, EOS}
        self._cache: dict = {}

    @property
    def outcomes(self) -> list:
        """Every token the model assigns probability to, sorted."""
        return sorted(self.vocab)

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        if word not in self.vocab:
            word = UNK
        context = tuple(UNK if (t not in self.vocab and t != BOS) else t for t in context)
        context = context[len(context) - (self.order - 1):] if self.order > 1 else ()
        return self._prob(word, context)

    def _prob(self, word: str, context: tuple) -> float:
        key = (word, context)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if context:
            lower = self._prob(word, context[1:])
        else:
            lower = 1.0 / len(self.vocab)
        total = self._ctx_total.get(context, 0)
        if total == 0:
            p = lower
        else:
            c = self.counts.get(context + (word,), 0)
            d = self.discount
            p = max(c - d, 0.0) / total + d * self._ctx_types[context] / total * lower
        self._cache[key] = p
        return p

    def logprob(self, word: str, context: Sequence[str] = ()) -> float:
        return math.log(self.prob(word, context))

    def initial_state(self) -> tuple:
        return (BOS,) * (self.order - 1)

    def advance(self, state: tuple, word: str) -> tuple:
        if self.order == 1:
            return ()
        return (state + (word,))[1:]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{HEADER_PREFIX} order={self.order} discount={self.discount!r}\n")
            for gram in sorted(self.counts, key=lambda g: (len(g), g)):
                fh.write(" ".join(gram) + "\t" + str(self.counts[gram]) + "\n")

    @classmethod
    def load(cls, path) -> "NGramModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if header[:2] != HEADER_PREFIX.split():
                raise ValueError(f"{path}: not a premt LM file")
            opts = dict(kv.split("=", 1) for kv in header[2:])
            counts = {}
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                gram, c = line.rsplit("\t", 1)
                counts[tuple(gram.split(" "))] = int(c)
        return cls(int(opts["order"]), counts, float(opts.get("discount", 0.75)))


def train_lm(sentences: Iterable[Sequence[str]], order: int = 3, discount: float = 0.75) -> NGramModel:
    """Count n-grams of every order up to ``order``.

    Each sentence is padded with ``order - 1`` BOS symbols and terminated by
    EOS; every token after the padding, EOS included, is a prediction event
    counted once per order.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    counts = defaultdict(int)
    n = 0
    for sent in sentences:
        n += 1
        padded = (BOS,) * (order - 1) + tuple(sent) + (EOS,)
        for i in range(order - 1, len(padded)):
            for k in range(1, order + 1):
                counts[padded[i - k + 1:i + 1]] += 1
    if n == 0:
        raise ValueError("cannot train a language model on an empty corpus")
    return NGramModel(order, dict(counts), discount)


def score_sequence(model: NGramModel, sentence: Sequence[str]) -> float:
    """Natural-log probability of ``sentence`` followed by EOS."""
    state = model.initial_state()
    total = 0.0
    for word in tuple(sentence) + (EOS,):
        total += model.logprob(word, state)
        state = model.advance(state, word)
    return total


def perplexity(model, sentences: Iterable[Sequence[str]]) -> float:
    total, n = 0.0, 0
    for sent in sentences:
        total += score_sequence(model, sent)
        n += len(sent) + 1
    if n == 0:
        raise ValueError("perplexity of an empty corpus is undefined")
    return math.exp(-total / n)


class NGramLM(BaseEstimator):
    """Estimator wrapper: ``NGramLM(order=3).fit(sentences).score(test)``."""

    def __init__(self, order: int = 3, discount: float = 0.75):
        self.order = order
        self.discount = discount

    def fit(self, X, y=None):
        self.model_ = train_lm(X, self.order, self.discount)
        return self

    def score_samples(self, X) -> list:
        check_is_fitted(self, "model_")
        return [score_sequence(self.model_, s) for s in X]

    def score(self, X, y=None) -> float:
        # higher is better, matching the scikit-learn convention
        check_is_fitted(self, "model_")
        return -perplexity(self.model_, X)
