"""Tokenized text ingestion, parallel corpora and vocabularies.

Input text is assumed to be pre-tokenized: a sentence is a line, tokens are
separated by whitespace.  Sentences are represented as tuples of strings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
PAD = "<pad>"
RESERVED = (UNK, BOS, EOS, PAD)
BPE_MARKER = "@@"

Sentence = tuple  # tuple[str, ...]


class CorpusError(ValueError):
    """Raised for malformed corpus input."""


def tokenize(line: str) -> Sentence:
    return tuple(line.split())


def check_sentence(tokens: Iterable[str], *, allow_marker: bool = True) -> Sentence:
    """Validate a token sequence and return it as a tuple."""
    sent = tuple(tokens)
    for tok in sent:
        if not isinstance(tok, str) or not tok:
            raise CorpusError(f"invalid token {tok!r}")
        if any(ch.isspace() for ch in tok):
            raise CorpusError(f"token contains whitespace: {tok!r}")
        if tok in RESERVED:
            raise CorpusError(f"reserved token in input: {tok}")
        if not allow_marker and BPE_MARKER in tok:
            raise CorpusError(f"token contains the subword marker {BPE_MARKER!r}: {tok}")
    return sent


@dataclass(frozen=True)
class ParallelCorpus:
    """Sentence-aligned pairs; ``pairs[i] == (source_i, target_i)``."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((check_sentence(s), check_sentence(t)) for s, t in self.pairs)
        for i, (s, t) in enumerate(pairs):
            if not s or not t:
                raise CorpusError(f"empty sentence in pair {i}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_sides(cls, sources: Iterable[Sequence[str]], targets: Iterable[Sequence[str]]):
        sources, targets = list(sources), list(targets)
        if len(sources) != len(targets):
            raise CorpusError(
                f"line-count mismatch: {len(sources)} != {len(targets)}")
        return cls(tuple(zip(sources, targets)))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def sources(self) -> list:
        return [s for s, _ in self.pairs]

    @property
    def targets(self) -> list:
        return [t for _, t in self.pairs]

    def side(self, side: str) -> list:
        if side == "source":
            return self.sources
        if side == "target":
            return self.targets
        raise ValueError(f"side must be 'source' or 'target', got {side!r}")


def read_sentences(path, *, allow_marker: bool = False) -> list:
    """Read one tokenized sentence per line; trailing blank lines are dropped."""
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n")
    sentences = []
    for lineno, line in enumerate(lines, start=1):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusError(f"{path}: undecodable bytes on line {lineno}: {exc.reason}") from None
        try:
            sentences.append(check_sentence(tokenize(text), allow_marker=allow_marker))
        except CorpusError as exc:
            raise CorpusError(f"{path}: line {lineno}: {exc}") from None
    while sentences and not sentences[-1]:
        sentences.pop()
    return sentences


def write_sentences(path, sentences: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sent in sentences:
            fh.write(" ".join(sent) + "\n")


def load_corpus(path, paired_path=None, *, allow_marker: bool = False):
    """Load a parallel corpus from two aligned files.

    With ``paired_path=None`` the single file is returned as a list of
    sentences instead (monolingual input).
    """
    src = read_sentences(path, allow_marker=allow_marker)
    if paired_path is None:
        return src
    tgt = read_sentences(paired_path, allow_marker=allow_marker)
    if len(src) != len(tgt):
        raise CorpusError(f"line-count mismatch: {len(src)} != {len(tgt)} "
                          f"({path} vs {paired_path})")
    return ParallelCorpus.from_sides(src, tgt)


@dataclass(frozen=True)
class Vocabulary:
    """Token/id bijection plus raw training counts.

    ``counts`` records every token seen, including those below ``min_count``
    which have no id of their own and map to ``<unk>``.
    """

    tokens: tuple
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.tokens[:len(RESERVED)]) != RESERVED:
            raise ValueError("vocabulary must start with the reserved tokens")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate vocabulary entries")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("negative count")
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(self.tokens)})

    unk_id = 0
    bos_id = 1
    eos_id = 2
    pad_id = 3

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token) -> bool:
        return token in self._ids

    def id(self, token: str) -> int:
        return self._ids.get(token, self.unk_id)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    def encode(self, sentence: Sequence[str]) -> list:
        return [self._ids.get(t, self.unk_id) for t in sentence]

    def decode(self, ids: Iterable[int]) -> Sentence:
        return tuple(self.tokens[i] for i in ids)

    def count(self, token: str) -> int:
        return self.counts.get(token, 0)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, tok in enumerate(self.tokens):
                fh.write(f"{tok}\t{i}\t{self.counts.get(tok, 0)}\n")
            # below-threshold tokens carry counts but no id
            for tok in sorted(t for t in self.counts if t not in self._ids):
                fh.write(f"{tok}\t-1\t{self.counts[tok]}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        entries, counts = [], {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    tok, idx, cnt = line.split("\t")
                    idx, cnt = int(idx), int(cnt)
                except ValueError:
                    raise CorpusError(f"{path}: malformed vocabulary line {lineno}") from None
                if idx >= 0:
                    entries.append((idx, tok))
                if tok not in RESERVED or cnt:
                    counts[tok] = cnt
        entries.sort()
        if [i for i, _ in entries] != list(range(len(entries))):
            raise CorpusError(f"{path}: vocabulary ids are not dense")
        return cls(tuple(t for _, t in entries), counts)


def count_tokens(sentences: Iterable[Sequence[str]]) -> Counter:
    counts = Counter()
    for sent in sentences:
        counts.update(sent)
    return counts


def build_vocabulary(corpus, side: str = "target", min_count: int = 1) -> Vocabulary:
    """Build a vocabulary from one side of a corpus.

    ``corpus`` may be a :class:`ParallelCorpus` (then ``side`` selects
    which half) or a plain list of sentences.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    sentences = corpus.side(side) if isinstance(corpus, ParallelCorpus) else list(corpus)
    if not sentences:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts = count_tokens(sentences)
    kept = sorted((t for t, c in counts.items() if c >= min_count),
                  key=lambda t: (-counts[t], t))
    return Vocabulary(RESERVED + tuple(kept), dict(counts))
