"""Corpus BLEU and frequency-bucketed rare-word analysis."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bpe import undo_bpe
from .corpus import UNK, Vocabulary

MAX_N = 4


@dataclass(frozen=True)
class BleuReport:
    bleu: float
    precisions: tuple
    brevity_penalty: float
    hyp_len: int
    ref_len: int

    def __str__(self) -> str:
        prec = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return (f"BLEU = {100 * self.bleu:.2f} {prec} (BP={self.brevity_penalty:.3f} "
                f"hyp_len={self.hyp_len} ref_len={self.ref_len})")


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sentence_stats(hyp: Sequence[str], ref: Sequence[str], max_n: int = MAX_N) -> np.ndarray:
    """Sufficient statistics ``[hyp_len, ref_len, m_1, t_1, ..., m_N, t_N]``.

    ``m_n`` is the clipped n-gram match count and ``t_n`` the number of
    hypothesis n-grams.  Corpus BLEU is a function of the summed vectors.
    """
    stats = np.zeros(2 + 2 * max_n, dtype=np.int64)
    stats[0], stats[1] = len(hyp), len(ref)
    for n in range(1, max_n + 1):
        h, r = _ngrams(hyp, n), _ngrams(ref, n)
        stats[2 * n] = sum(min(c, r[g]) for g, c in h.items())
        stats[2 * n + 1] = max(len(hyp) - n + 1, 0)
    return stats


def bleu_from_stats(stats, smooth: bool = False, max_n: int = MAX_N) -> BleuReport:
    """BLEU from summed sufficient statistics.

    With ``smooth=True`` the precisions for n > 1 get add-one smoothing;
    this is the variant used as the tuning objective.
    """
    stats = np.asarray(stats)
    hyp_len, ref_len = int(stats[0]), int(stats[1])
    precisions = []
    for n in range(1, max_n + 1):
        m, t = float(stats[2 * n]), float(stats[2 * n + 1])
        if smooth and n > 1:
            m, t = m + 1.0, t + 1.0
        precisions.append(m / t if t > 0 else 0.0)
    if hyp_len == 0:
        return BleuReport(0.0, tuple(precisions), 0.0, hyp_len, ref_len)
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    # orders with no hypothesis n-grams at all (corpus of very short
    # sentences) drop out of the geometric mean instead of zeroing it
    used = [p for n, p in enumerate(precisions, 1) if stats[2 * n + 1] > 0 or smooth]
    if min(used) <= 0.0:
        score = 0.0
    else:
        score = bp * math.exp(sum(math.log(p) for p in used) / len(used))
    return BleuReport(min(score, 1.0), tuple(precisions), bp, hyp_len, ref_len)


def corpus_stats(hypotheses, references) -> np.ndarray:
    hypotheses, references = list(hypotheses), list(references)
    if len(hypotheses) != len(references):
        raise ValueError(f"hypothesis/reference count mismatch: "
                         f"{len(hypotheses)} != {len(references)}")
    total = np.zeros(2 + 2 * MAX_N, dtype=np.int64)
    for h, r in zip(hypotheses, references):
        total += sentence_stats(h, r)
    return total


def bleu(hypotheses, references, *, marker: str | None = None, smooth: bool = False) -> BleuReport:
    """Case-sensitive corpus BLEU (n <= 4, clipped counts, brevity penalty).

    Pass ``marker`` to join BPE subword units before scoring.
    """
    hypotheses, references = list(hypotheses), list(references)
    if marker is not None:
        hypotheses = [undo_bpe(h, marker) for h in hypotheses]
        references = [undo_bpe(r, marker) for r in references]
    return bleu_from_stats(corpus_stats(hypotheses, references), smooth=smooth)


def sentence_bleu(hyp, ref) -> float:
    """Smoothed sentence-level BLEU."""
    return bleu_from_stats(sentence_stats(hyp, ref), smooth=True).bleu


def _count_of(counts, token: str) -> int:
    if isinstance(counts, Vocabulary):
        return counts.count(token)
    return counts.get(token, 0)


def unk_replace(sentences, counts: Vocabulary | Mapping[str, int], n: int) -> list:
    """Replace every token seen fewer than ``n`` times in training by ``<unk>``."""
    if n < 1:
        raise ValueError("threshold must be >= 1")
    return [tuple(t if t == UNK or _count_of(counts, t) >= n else UNK for t in sent)
            for sent in sentences]


@dataclass
class FrequencyBucketReport:
    thresholds: list
    systems: list
    normalize_to: str
    bleu: dict = field(default_factory=dict)          # (N, system) -> float
    normalized: dict = field(default_factory=dict)    # (N, system) -> float | None
    unk_count: dict = field(default_factory=dict)     # (N, system) -> int
    reference_unk: dict = field(default_factory=dict)  # N -> int

    def curve(self, system: str, normalized: bool = True) -> list:
        table = self.normalized if normalized else self.bleu
        return [table[(n, system)] for n in self.thresholds]

    def rows(self):
        for n in self.thresholds:
            for name in self.systems:
                yield n, name, self.bleu[(n, name)], self.normalized[(n, name)], self.unk_count[(n, name)]

    def to_tsv(self) -> str:
        lines = ["N\tsystem\tbleu\tnormalized\tunk_count"]
        for n, name, b, norm, unk in self.rows():
            norm_s = "NA" if norm is None else f"{norm:.6f}"
            lines.append(f"{n}\t{name}\t{b:.6f}\t{norm_s}\t{unk}")
        return "\n".join(lines) + "\n"


def frequency_sweep(systems: Mapping[str, Sequence], references, counts, thresholds,
                    normalize_to: str) -> FrequencyBucketReport:
    """BLEU per system after masking words rarer than each threshold.

    Hypotheses and references are masked identically.  Scores are then
    divided by the ``normalize_to`` system's score at the same threshold;
    where that score is zero the normalized value is ``None``.
    """
    if normalize_to not in systems:
        raise KeyError(f"normalize_to system {normalize_to!r} not among {sorted(systems)}")
    references = list(references)
    report = FrequencyBucketReport(list(thresholds), list(systems), normalize_to)
    for n in report.thresholds:
        refs = unk_replace(references, counts, n)
        report.reference_unk[n] = sum(t == UNK for s in refs for t in s)
        for name, hyps in systems.items():
            masked = unk_replace(hyps, counts, n)
            report.bleu[(n, name)] = bleu(masked, refs).bleu
            report.unk_count[(n, name)] = sum(t == UNK for s in masked for t in s)
        base = report.bleu[(n, normalize_to)]
        for name in systems:
            report.normalized[(n, name)] = report.bleu[(n, name)] / base if base > 0 else None
    return report
