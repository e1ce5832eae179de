"""Phrase-based statistical machine translation."""

from .align import NULL, LexicalTable, align_viterbi, ibm1_log_likelihood, symmetrize, train_ibm1, word_align
from .decoder import DECODER_FEATURES, DecodeResult, Hypothesis, LogLinearWeights, decode, full_feature_names
from .mert import NBestPool, line_search, tune_weights
from .phrases import FEATURE_NAMES, PhrasePair, PhraseTable, consistent_spans, extract_phrases, filter_singletons
from .system import PhraseBasedMT

__all__ = [
    "NULL", "LexicalTable", "align_viterbi", "ibm1_log_likelihood", "symmetrize", "train_ibm1",
    "word_align", "DECODER_FEATURES", "DecodeResult", "Hypothesis", "LogLinearWeights", "decode",
    "full_feature_names", "NBestPool", "line_search", "tune_weights", "FEATURE_NAMES", "PhrasePair",
    "PhraseTable", "consistent_spans", "extract_phrases", "filter_singletons", "PhraseBasedMT",
]
