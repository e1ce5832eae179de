"""IBM Model 1 lexical translation and Viterbi word alignment."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from ..corpus import ParallelCorpus

NULL = "<null>"


@dataclass(frozen=True)
class LexicalTable:
    """``probs[(f, e)] = t(e | f)``; ``f`` may be :data:`NULL`."""

    probs: dict

    def __getitem__(self, key) -> float:
        return self.probs.get(key, 0.0)

    def t(self, e: str, f: str) -> float:
        return self.probs.get((f, e), 0.0)

    def totals(self) -> dict:
        tot = defaultdict(float)
        for (f, _), p in self.probs.items():
            tot[f] += p
        return dict(tot)


def _em_step(pairs, t):
    counts = defaultdict(float)
    totals = defaultdict(float)
    for src, tgt in pairs:
        src_n = (NULL,) + src
        for e in tgt:
            z = sum(t[(f, e)] for f in src_n)
            for f in src_n:
                c = t[(f, e)] / z
                counts[(f, e)] += c
                totals[f] += c
    return {k: v / totals[k[0]] for k, v in counts.items()}


def train_ibm1(corpus: ParallelCorpus, iterations: int = 5, *, history: list | None = None) -> LexicalTable:
    """EM training of t(target | source) with a NULL source word.

    Initialization is uniform over the target vocabulary.  If ``history``
    is given, the corpus log-likelihood after each iteration is appended.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pairs = [(tuple(s), tuple(t)) for s, t in corpus]
    if not pairs:
        raise ValueError("cannot train IBM Model 1 on an empty corpus")
    e_vocab = {e for _, tgt in pairs for e in tgt}
    uniform = 1.0 / len(e_vocab)
    t = defaultdict(lambda: uniform)
    for _ in range(iterations):
        t = _em_step(pairs, t)
        if history is not None:
            history.append(ibm1_log_likelihood(corpus, LexicalTable(t)))
        t = defaultdict(float, t)
    return LexicalTable(dict(t))


def ibm1_log_likelihood(corpus: ParallelCorpus, lex: LexicalTable) -> float:
    """log p(targets | sources) under Model 1, up to the length model."""
    ll = 0.0
    for src, tgt in corpus:
        src_n = (NULL,) + tuple(src)
        for e in tgt:
            ll += math.log(sum(lex.t(e, f) for f in src_n) / len(src_n))
    return ll


def align_viterbi(pair, lex: LexicalTable) -> list:
    """Best source position for each target word.

    Returns sorted ``(source_pos, target_pos)`` links.  Ties go to the
    leftmost source word; NULL wins only when strictly better than every
    real word, and NULL-aligned target words get no link.
    """
    src, tgt = pair
    links = []
    for j, e in enumerate(tgt):
        best_i, best_p = None, -1.0
        for i, f in enumerate(src):
            p = lex.t(e, f)
            if p > best_p:
                best_i, best_p = i, p
        if lex.t(e, NULL) > best_p:
            best_i = None
        if best_i is not None:
            links.append((best_i, j))
    return sorted(links)


def symmetrize(forward: list, backward: list) -> list:
    """Intersect source->target links with (transposed) target->source links."""
    back = {(i, j) for j, i in backward}
    return sorted(set(forward) & back)


def word_align(corpus: ParallelCorpus, iterations: int = 5):
    """Train Model 1 both ways and intersect the Viterbi alignments.

    Returns ``(alignments, lex_e_given_f, lex_f_given_e)``.
    """
    fwd = train_ibm1(corpus, iterations)
    rev_corpus = ParallelCorpus(tuple((t, s) for s, t in corpus))
    bwd = train_ibm1(rev_corpus, iterations)
    alignments = []
    for (s, t) in corpus:
        alignments.append(symmetrize(align_viterbi((s, t), fwd), align_viterbi((t, s), bwd)))
    return alignments, fwd, bwd
