"""Byte-pair-encoding subword segmentation.

Non-final subword units carry a continuation marker (``"@@"`` by default):
``"goalie" -> "go@@ al@@ ie"``.  Merges never cross word boundaries.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import BPE_MARKER, ParallelCorpus, check_sentence

HEADER = "#premt-bpe v1"


class BPEError(ValueError):
    pass


@dataclass(frozen=True)
class MergeTable:
    merges: tuple = ()
    marker: str = BPE_MARKER

    def __post_init__(self):
        merges = tuple((str(a), str(b)) for a, b in self.merges)
        if len(set(merges)) != len(merges):
            raise BPEError("duplicate merge pair")
        if not self.marker:
            raise BPEError("marker must be nonempty")
        object.__setattr__(self, "merges", merges)
        object.__setattr__(self, "_ranks", {m: i for i, m in enumerate(merges)})

    def __len__(self) -> int:
        return len(self.merges)

    def rank(self, pair) -> int | None:
        return self._ranks.get(pair)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(HEADER + "\n")
            for a, b in self.merges:
                fh.write(f"{a} {b}\n")

    @classmethod
    def load(cls, path, marker: str = BPE_MARKER) -> "MergeTable":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if not lines or lines[0].strip() != HEADER:
            raise BPEError(f"{path}: missing {HEADER!r} header")
        merges = []
        for lineno, line in enumerate(lines[1:], 2):
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 2 or not all(parts):
                raise BPEError(f"{path}: malformed merge on line {lineno}")
            merges.append((parts[0], parts[1]))
        return cls(tuple(merges), marker)


def _word_counts(data, joint: bool = True) -> Counter:
    if isinstance(data, ParallelCorpus):
        sentences = data.sources + data.targets if joint else data.sources
    else:
        sentences = list(data)
        if sentences and isinstance(sentences[0], str):
            # a flat token list
            sentences = [sentences]
    counts = Counter()
    for sent in sentences:
        counts.update(sent)
    return counts


def learn_bpe(data, num_merges: int, *, joint: bool = True, marker: str = BPE_MARKER) -> MergeTable:
    """Learn ``num_merges`` merge operations.

    ``data`` is a :class:`ParallelCorpus`, a list of sentences, or a flat
    token list.  For a corpus, both sides are pooled unless ``joint=False``,
    in which case only the source side is used (learn per side by passing
    each side's sentences separately).

    Ties in pair frequency are broken by the lexicographically smallest
    ``(left, right)`` pair.  Learning stops early once no pair occurs at
    least twice.
    """
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    word_counts = _word_counts(data, joint)
    if not word_counts:
        raise ValueError("cannot learn BPE from an empty corpus")

    words = [list(w) for w in word_counts]
    freqs = list(word_counts.values())
    pair_counts: Counter = Counter()
    where = defaultdict(set)  # pair -> indices of words containing it
    for i, syms in enumerate(words):
        for pair in zip(syms, syms[1:]):
            pair_counts[pair] += freqs[i]
            where[pair].add(i)

    merges = []
    for _ in range(num_merges):
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        pair, count = best
        if count < 2:
            break
        merges.append(pair)
        a, b = pair
        joined = a + b
        for i in sorted(where.pop(pair, ())):
            syms = words[i]
            f = freqs[i]
            for old in zip(syms, syms[1:]):
                pair_counts[old] -= f
                if pair_counts[old] <= 0:
                    del pair_counts[old]
            out, j = [], 0
            while j < len(syms):
                if j + 1 < len(syms) and syms[j] == a and syms[j + 1] == b:
                    out.append(joined)
                    j += 2
                else:
                    out.append(syms[j])
                    j += 1
            words[i] = out
            for new in zip(out, out[1:]):
                pair_counts[new] += f
                where[new].add(i)
        pair_counts.pop(pair, None)
    return MergeTable(tuple(merges), marker)


def segment_word(word: str, merges: MergeTable) -> list:
    """Split ``word`` into characters and apply merges in learned order."""
    syms = list(word)
    while len(syms) > 1:
        ranked = [(merges.rank(p), k) for k, p in enumerate(zip(syms, syms[1:]))
                  if merges.rank(p) is not None]
        if not ranked:
            break
        r, _ = min(ranked)
        a, b = merges.merges[r]
        out, j = [], 0
        while j < len(syms):
            if j + 1 < len(syms) and syms[j] == a and syms[j + 1] == b:
                out.append(a + b)
                j += 2
            else:
                out.append(syms[j])
                j += 1
        syms = out
    return syms


def apply_bpe(sentence: Sequence[str], merges: MergeTable) -> tuple:
    out = []
    for word in sentence:
        units = segment_word(word, merges)
        out.extend(u + merges.marker for u in units[:-1])
        out.append(units[-1])
    return tuple(out)


def undo_bpe(sentence: Sequence[str], marker: str = BPE_MARKER) -> tuple:
    out, pending = [], ""
    for tok in sentence:
        if tok.endswith(marker):
            pending += tok[:-len(marker)]
        else:
            out.append(pending + tok)
            pending = ""
    if pending:
        raise BPEError(f"dangling continuation marker at end of sentence: {' '.join(sentence)}")
    return tuple(out)


class BPE(TransformerMixin, BaseEstimator):
    """Subword segmenter with a scikit-learn style interface.

    >>> bpe = BPE(num_merges=1).fit([["ab", "ab", "ab"]])
    >>> bpe.transform([["abc"]])
    [('ab@@', 'c')]
    """

    def __init__(self, num_merges: int = 1000, marker: str = BPE_MARKER, joint: bool = True):
        self.num_merges = num_merges
        self.marker = marker
        self.joint = joint

    def fit(self, X, y=None):
        if y is not None and self.joint:
            X = ParallelCorpus.from_sides(X, y)
        self.merges_ = learn_bpe(X, self.num_merges, joint=self.joint, marker=self.marker)
        return self

    def transform(self, X: Iterable[Sequence[str]]) -> list:
        check_is_fitted(self, "merges_")
        return [apply_bpe(check_sentence(s), self.merges_) for s in X]

    def inverse_transform(self, X: Iterable[Sequence[str]]) -> list:
        return [undo_bpe(s, self.marker) for s in X]
