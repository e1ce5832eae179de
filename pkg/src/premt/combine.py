"""Pre-translation: feeding phrase-based output into a neural system.

Two combinations are provided.  In the *pipeline* the neural model sees
only the phrase-based translation and learns to correct it.  In the
*mixed* combination it sees the marked phrase-based translation followed
by the marked original source::

    >>> build_mixed_input(("the", "goalie"), ("der", "Torwart")).tokens
    ('D_der', 'D_Torwart', 'E_the', 'E_goalie')

Marking keeps the two vocabularies apart.  Subword segmentation is applied
to the unmarked word and the prefix is reattached to the first unit, so
``undo_bpe`` still restores the marked words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .bpe import MergeTable, learn_bpe, segment_word, undo_bpe
from .corpus import ParallelCorpus, check_sentence
from .nmt.estimator import AttentionNMT
from .smt.system import PhraseBasedMT


class CombineError(ValueError):
    """Invalid input to a combination step."""


class StageError(RuntimeError):
    """A component failed; ``stage`` names it and ``index`` the sentence, if known."""

    def __init__(self, stage: str, cause: Exception, index: int | None = None):
        where = f" (sentence {index})" if index is not None else ""
        super().__init__(f"{stage}{where}: {cause}")
        self.stage = stage
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class MarkingScheme:
    pbmt_prefix: str = "D_"
    source_prefix: str = "E_"

    def __post_init__(self):
        a, b = self.pbmt_prefix, self.source_prefix
        if not a or not b:
            raise CombineError("marking prefixes must be nonempty")
        if a.startswith(b) or b.startswith(a):
            raise CombineError(f"marking prefixes {a!r} and {b!r} are not distinguishable")

    @property
    def prefixes(self) -> tuple:
        return self.pbmt_prefix, self.source_prefix

    def check(self, sentence: Sequence[str]) -> None:
        for tok in sentence:
            for prefix in self.prefixes:
                if tok.startswith(prefix):
                    raise CombineError(f"token {tok!r} already starts with marking prefix {prefix!r}")

    def mark(self, sentence: Sequence[str], prefix: str) -> tuple:
        self.check(sentence)
        return tuple(prefix + tok for tok in sentence)

    def prefix_of(self, token: str) -> str:
        for prefix in self.prefixes:
            if token.startswith(prefix):
                return prefix
        return ""


def unmark(tokens: Sequence[str], prefix: str) -> tuple:
    out = []
    for tok in tokens:
        if not tok.startswith(prefix):
            raise CombineError(f"token {tok!r} lacks prefix {prefix!r}")
        out.append(tok[len(prefix):])
    return tuple(out)


@dataclass(frozen=True)
class MixedInput:
    """Marked pre-translation followed by the marked source; ``boundary`` is
    the index of the first source token."""

    tokens: tuple
    boundary: int

    def __post_init__(self):
        if not 0 <= self.boundary <= len(self.tokens):
            raise CombineError("boundary outside the token sequence")

    def split(self, scheme: MarkingScheme = MarkingScheme()) -> tuple:
        """``(source, pretranslation)`` with the prefixes removed."""
        return (unmark(self.tokens[self.boundary:], scheme.source_prefix),
                unmark(self.tokens[:self.boundary], scheme.pbmt_prefix))


def build_mixed_input(source: Sequence[str], pretranslation: Sequence[str],
                      scheme: MarkingScheme = MarkingScheme()) -> MixedInput:
    if not source or not pretranslation:
        raise CombineError("source and pre-translation must be nonempty")
    pre = scheme.mark(pretranslation, scheme.pbmt_prefix)
    src = scheme.mark(source, scheme.source_prefix)
    return MixedInput(pre + src, len(pre))


def apply_bpe_marked(sentence: Sequence[str], merges: MergeTable,
                     scheme: MarkingScheme = MarkingScheme()) -> tuple:
    """Segment marked words; the prefix stays on the first unit only."""
    out = []
    for word in sentence:
        prefix = scheme.prefix_of(word)
        units = segment_word(word[len(prefix):], merges) if len(word) > len(prefix) else [""]
        units[0] = prefix + units[0]
        out.extend(u + merges.marker for u in units[:-1])
        out.append(units[-1])
    return tuple(out)


def pretranslate_corpus(corpus: ParallelCorpus, smt: PhraseBasedMT, filter: bool = False) -> ParallelCorpus:
    """Pairs ``(pbmt(source), target)``; with ``filter`` singleton phrase
    pairs are removed before decoding."""
    system = smt.filtered() if filter else smt
    pre = []
    for i, src in enumerate(corpus.sources):
        try:
            pre.append(system.decode(src).translation)
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise StageError("pbmt", exc, i) from exc
    return ParallelCorpus.from_sides(pre, corpus.targets)


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise StageError(name, exc) from exc


def pipeline_translate(source: Sequence[str], smt: PhraseBasedMT, mono_nmt: AttentionNMT,
                       merges: MergeTable | None = None) -> tuple:
    """``undo_bpe(nmt(apply_bpe(pbmt(source))))``.

    ``merges`` overrides the network's own subword model; the network then
    works directly on the units produced here.
    """
    source = check_sentence(source)
    pre = _stage("pbmt", lambda s: smt.decode(s).translation, source)
    if merges is None:
        return _stage("nmt", lambda s: mono_nmt.predict([s])[0], pre)
    units = apply_bpe_marked(pre, merges, MarkingScheme())
    out, _, _ = _stage("nmt", mono_nmt.translate, units)
    return _stage("bpe", undo_bpe, _close(out, merges.marker), merges.marker)


def _close(units, marker: str) -> list:
    units = list(units)
    if units and units[-1].endswith(marker):
        units[-1] = units[-1][:-len(marker)]
    return units


class MixedTranslation(NamedTuple):
    translation: tuple
    attention: np.ndarray   # rows: output units + </s>; columns: ``units``
    units: tuple            # the segmented network input
    boundary: int           # index in ``units`` where the source part starts
    output_units: tuple     # the network output before joining subwords


def mixed_translate(source: Sequence[str], smt: PhraseBasedMT, mixed_nmt: AttentionNMT,
                    merges: MergeTable, scheme: MarkingScheme = MarkingScheme()) -> MixedTranslation:
    source = check_sentence(source)
    pre = _stage("pbmt", lambda s: smt.decode(s).translation, source)
    mixed = _stage("mark", build_mixed_input, source, pre, scheme)
    pre_units = apply_bpe_marked(mixed.tokens[:mixed.boundary], merges, scheme)
    units = pre_units + apply_bpe_marked(mixed.tokens[mixed.boundary:], merges, scheme)
    out, attention, _ = _stage("nmt", mixed_nmt.translate, units)
    words = _stage("bpe", undo_bpe, _close(out, merges.marker), merges.marker)
    return MixedTranslation(words, attention, units, len(pre_units), tuple(out))


class PreTranslationMT(BaseEstimator):
    """Phrase-based pre-translation followed by a neural system.

    ``mode="pipeline"`` trains the network on (pre-translation, target)
    pairs and ``mode="mixed"`` on (marked pre-translation + marked source,
    target).  Training pre-translations come from the phrase-based system
    trained on the same data, with singleton phrase pairs removed when
    ``filter_singletons`` is set.  ``bpe_merges`` joint merges are learned
    on the unmarked training corpus.  ``smt`` and ``nmt`` are cloned
    before fitting.
    """

    def __init__(self, mode: str = "mixed", smt: PhraseBasedMT | None = None,
                 nmt: AttentionNMT | None = None, bpe_merges: int = 300,
                 filter_singletons: bool = True, pbmt_prefix: str = "D_", source_prefix: str = "E_"):
        self.mode = mode
        self.smt = smt
        self.nmt = nmt
        self.bpe_merges = bpe_merges
        self.filter_singletons = filter_singletons
        self.pbmt_prefix = pbmt_prefix
        self.source_prefix = source_prefix

    @property
    def scheme(self) -> MarkingScheme:
        return MarkingScheme(self.pbmt_prefix, self.source_prefix)

    def _check_mode(self):
        if self.mode not in ("pipeline", "mixed"):
            raise ValueError(f"mode must be 'pipeline' or 'mixed', got {self.mode!r}")

    def network_input(self, source, pretranslation) -> tuple:
        """The unit sequence the network sees for one sentence."""
        if self.mode == "pipeline":
            return apply_bpe_marked(pretranslation, self.merges_, self.scheme)
        mixed = build_mixed_input(source, pretranslation, self.scheme)
        return apply_bpe_marked(mixed.tokens, self.merges_, self.scheme)

    def fit(self, X, y=None, *, smt_fitted: PhraseBasedMT | None = None, merges: MergeTable | None = None,
            dev=None, callback=None):
        """Train.  ``smt_fitted`` and ``merges`` reuse already trained components."""
        self._check_mode()
        corpus = X if isinstance(X, ParallelCorpus) else ParallelCorpus.from_sides(X, y)
        for side in (corpus.sources, corpus.targets):
            for sent in side:
                self.scheme.check(sent)
        if smt_fitted is not None:
            self.smt_ = smt_fitted
        else:
            self.smt_ = clone(self.smt if self.smt is not None else PhraseBasedMT()).fit(corpus)
        self.merges_ = merges if merges is not None else learn_bpe(corpus, self.bpe_merges, joint=True)
        pre = pretranslate_corpus(corpus, self.smt_, self.filter_singletons)
        inputs = [self.network_input(s, p) for s, p in zip(corpus.sources, pre.sources)]
        outputs = [apply_bpe_marked(t, self.merges_, self.scheme) for t in corpus.targets]
        self.nmt_ = clone(self.nmt if self.nmt is not None else AttentionNMT())
        self.nmt_.set_params(bpe_merges=0, merges=None)
        dev_units = None
        if dev is not None:
            dev_src, dev_tgt = dev
            dev_units = ([self.network_input(s, self.smt_.decode(s).translation) for s in dev_src],
                         [apply_bpe_marked(t, self.merges_, self.scheme) for t in dev_tgt])
        self.nmt_.fit(inputs, outputs, dev=dev_units, callback=callback)
        return self

    def translate(self, source, smt: PhraseBasedMT | None = None) -> MixedTranslation:
        """Translate one sentence; ``smt`` swaps in another phrase-based
        system at test time only."""
        check_is_fitted(self, "nmt_")
        smt = smt or self.smt_
        source = check_sentence(source)
        if self.mode == "mixed":
            return mixed_translate(source, smt, self.nmt_, self.merges_, self.scheme)
        pre = _stage("pbmt", lambda s: smt.decode(s).translation, source)
        units = apply_bpe_marked(pre, self.merges_, self.scheme)
        out, attention, _ = _stage("nmt", self.nmt_.translate, units)
        words = _stage("bpe", undo_bpe, _close(out, self.merges_.marker), self.merges_.marker)
        return MixedTranslation(words, attention, units, len(units), tuple(out))

    def predict(self, X, smt: PhraseBasedMT | None = None) -> list:
        return [self.translate(s, smt).translation for s in X]
