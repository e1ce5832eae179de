"""Consistent phrase-pair extraction, phrase tables and singleton filtering."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from .align import NULL, LexicalTable

FEATURE_NAMES = ("log_p_e_given_f", "log_p_f_given_e", "log_lex_e_given_f",
                 "log_lex_f_given_e", "phrase_penalty")

# lexical probabilities below this are floored before taking logs
LEX_FLOOR = 1e-7


@dataclass(frozen=True)
class PhrasePair:
    source: tuple
    target: tuple
    features: tuple
    count: int = 1

    def __post_init__(self):
        if not self.source or not self.target:
            raise ValueError("phrase sides must be nonempty")
        if self.count < 1:
            raise ValueError("phrase count must be >= 1")
        if not all(math.isfinite(x) for x in self.features):
            raise ValueError(f"non-finite feature in {self}")


class PhraseTable:
    """Source phrase -> candidate :class:`PhrasePair` list."""

    def __init__(self, pairs=(), feature_names=FEATURE_NAMES):
        self.feature_names = tuple(feature_names)
        self.entries: dict = {}
        for pp in pairs:
            self.add(pp)

    def add(self, pp: PhrasePair) -> None:
        if len(pp.features) != len(self.feature_names):
            raise ValueError("feature vector length does not match feature_names")
        self.entries.setdefault(pp.source, []).append(pp)

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def __iter__(self):
        for src in sorted(self.entries):
            yield from self.entries[src]

    def __contains__(self, source) -> bool:
        return tuple(source) in self.entries

    def get(self, source) -> list:
        return self.entries.get(tuple(source), [])

    @property
    def max_source_len(self) -> int:
        return max((len(s) for s in self.entries), default=0)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for pp in self:
                feats = " ".join(repr(float(x)) for x in pp.features)
                fh.write(f"{' '.join(pp.source)} ||| {' '.join(pp.target)} ||| {feats} ||| {pp.count}\n")

    @classmethod
    def load(cls, path, feature_names=FEATURE_NAMES) -> "PhraseTable":
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = [f.strip() for f in line.split("|||")]
                if len(fields) != 4:
                    raise ValueError(f"{path}: malformed phrase table line {lineno}")
                src, tgt, feats, count = fields
                pairs.append(PhrasePair(tuple(src.split()), tuple(tgt.split()),
                                        tuple(float(x) for x in feats.split()), int(count)))
        return cls(pairs, feature_names)


def consistent_spans(n_src: int, n_tgt: int, links, max_len: int):
    """Yield ``(f_start, f_end, e_start, e_end)`` (inclusive) for every phrase
    pair consistent with the alignment ``links``.

    A pair is consistent when it holds at least one link and no link
    connects a word inside it to a word outside.  Unaligned source words
    at the edges are absorbed, yielding the usual extended variants.
    """
    links = list(links)
    f_aligned = {f for f, _ in links}
    for e_start in range(n_tgt):
        for e_end in range(e_start, min(e_start + max_len, n_tgt)):
            fs = [f for f, e in links if e_start <= e <= e_end]
            if not fs:
                continue
            f_start, f_end = min(fs), max(fs)
            if f_end - f_start + 1 > max_len:
                continue
            if any(f_start <= f <= f_end and not e_start <= e <= e_end for f, e in links):
                continue
            lo = f_start
            while True:
                hi = f_end
                while True:
                    yield lo, hi, e_start, e_end
                    hi += 1
                    if hi >= n_src or hi in f_aligned or hi - lo + 1 > max_len:
                        break
                lo -= 1
                if lo < 0 or lo in f_aligned or f_end - lo + 1 > max_len:
                    break


def _lex_weight(out_words, in_words, links, lex: LexicalTable | None, out_is_target: bool) -> float:
    """log lex(out | in) over the phrase-internal alignment."""
    if lex is None:
        return 0.0
    total = 0.0
    for j, w in enumerate(out_words):
        if out_is_target:
            linked = [f for f, e in links if e == j]
        else:
            linked = [e for f, e in links if f == j]
        if linked:
            p = sum(lex.t(w, in_words[i]) for i in linked) / len(linked)
        else:
            p = lex.t(w, NULL)
        total += math.log(max(p, LEX_FLOOR))
    return total


def extract_phrases(corpus, alignments, max_phrase_len: int = 3,
                    lex_e_given_f: LexicalTable | None = None,
                    lex_f_given_e: LexicalTable | None = None) -> PhraseTable:
    """Extract phrase pairs and score them.

    Features per pair: log relative frequencies in both directions, log
    lexical weights in both directions (0 when no lexical table is given;
    the best-scoring occurrence is kept) and a constant phrase penalty.
    """
    if max_phrase_len < 1:
        raise ValueError("max_phrase_len must be >= 1")
    if len(alignments) != len(corpus):
        raise ValueError("need one alignment per sentence pair")
    pair_count = defaultdict(int)
    lex_best = {}
    for (src, tgt), links in zip(corpus, alignments):
        links = sorted(links)
        for fs, fe, es, ee in consistent_spans(len(src), len(tgt), links, max_phrase_len):
            f_phr, e_phr = tuple(src[fs:fe + 1]), tuple(tgt[es:ee + 1])
            key = (f_phr, e_phr)
            pair_count[key] += 1
            local = [(f - fs, e - es) for f, e in links if fs <= f <= fe and es <= e <= ee]
            lw_ef = _lex_weight(e_phr, f_phr, local, lex_e_given_f, True)
            lw_fe = _lex_weight(f_phr, e_phr, local, lex_f_given_e, False)
            prev = lex_best.get(key)
            if prev is None or lw_ef + lw_fe > prev[0] + prev[1]:
                lex_best[key] = (lw_ef, lw_fe)

    f_count = defaultdict(int)
    e_count = defaultdict(int)
    for (f, e), c in pair_count.items():
        f_count[f] += c
        e_count[e] += c
    pairs = []
    for (f, e), c in sorted(pair_count.items()):
        lw_ef, lw_fe = lex_best[(f, e)]
        feats = (math.log(c / f_count[f]), math.log(c / e_count[e]), lw_ef, lw_fe, 1.0)
        pairs.append(PhrasePair(f, e, feats, c))
    return PhraseTable(pairs)


def filter_singletons(table: PhraseTable) -> PhraseTable:
    """Drop phrase pairs seen exactly once; survivors keep their scores."""
    return PhraseTable((pp for pp in table if pp.count != 1), table.feature_names)
