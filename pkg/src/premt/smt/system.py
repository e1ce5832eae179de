"""Trainable phrase-based system with a scikit-learn style interface."""

from __future__ import annotations

import copy
from pathlib import Path

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..corpus import ParallelCorpus, check_sentence
from ..lm import NGramModel, train_lm
from .align import word_align
from .decoder import LogLinearWeights, decode
from .mert import tune_weights
from .phrases import PhraseTable, extract_phrases, filter_singletons


class PhraseBasedMT(BaseEstimator):
    """Phrase-based translation: IBM-1 alignment, phrase extraction, n-gram
    LM and a log-linear stack decoder.

    ``fit(sources, targets)`` trains every component; ``predict`` decodes.
    """

    def __init__(self, max_phrase_len: int = 3, lm_order: int = 3, ibm_iterations: int = 5,
                 beam_size: int | None = 50, distortion_limit: int | None = 6):
        self.max_phrase_len = max_phrase_len
        self.lm_order = lm_order
        self.ibm_iterations = ibm_iterations
        self.beam_size = beam_size
        self.distortion_limit = distortion_limit

    def fit(self, X, y=None, lm_data=None):
        corpus = X if isinstance(X, ParallelCorpus) else ParallelCorpus.from_sides(X, y)
        alignments, lex_ef, lex_fe = word_align(corpus, self.ibm_iterations)
        self.alignments_ = alignments
        self.table_ = extract_phrases(corpus, alignments, self.max_phrase_len, lex_ef, lex_fe)
        self.lm_ = train_lm(lm_data if lm_data is not None else corpus.targets, self.lm_order)
        self.weights_ = LogLinearWeights.default(self.table_.feature_names)
        return self

    @classmethod
    def from_components(cls, table: PhraseTable, lm: NGramModel,
                        weights: LogLinearWeights | None = None, **params) -> "PhraseBasedMT":
        system = cls(**params)
        system.table_ = table
        system.lm_ = lm
        system.weights_ = weights or LogLinearWeights.default(table.feature_names)
        return system

    def tune(self, dev_sources, dev_targets, rounds: int = 5, seed: int = 0, **kwargs):
        check_is_fitted(self, "table_")
        dev = ParallelCorpus.from_sides(dev_sources, dev_targets)
        self.weights_ = tune_weights(dev, self.table_, self.lm_, self.weights_, rounds,
                                     beam_size=self.beam_size,
                                     distortion_limit=self.distortion_limit, seed=seed, **kwargs)
        return self

    def filtered(self) -> "PhraseBasedMT":
        """A copy whose phrase table has the singleton pairs removed."""
        check_is_fitted(self, "table_")
        other = copy.copy(self)
        other.table_ = filter_singletons(self.table_)
        return other

    def decode(self, sentence, nbest: int = 1):
        check_is_fitted(self, "table_")
        return decode(check_sentence(sentence), self.table_, self.lm_, self.weights_,
                      self.beam_size, self.distortion_limit, nbest)

    def predict(self, X) -> list:
        return [self.decode(s).translation for s in X]

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.table_.save(d / "phrase-table.txt")
        self.lm_.save(d / "lm.txt")
        self.weights_.save(d / "weights.txt")
        with open(d / "decoder.txt", "w", encoding="utf-8") as fh:
            fh.write(f"beam_size={self.beam_size}\ndistortion_limit={self.distortion_limit}\n")

    @classmethod
    def load(cls, directory) -> "PhraseBasedMT":
        d = Path(directory)
        params = {}
        if (d / "decoder.txt").exists():
            for line in (d / "decoder.txt").read_text(encoding="utf-8").split():
                k, v = line.split("=")
                params[k] = None if v == "None" else int(v)
        return cls.from_components(PhraseTable.load(d / "phrase-table.txt"),
                                   NGramModel.load(d / "lm.txt"),
                                   LogLinearWeights.load(d / "weights.txt"), **params)
