"""Stack decoding under the log-linear phrase-based model.

A translation's score is ``sum_n lambda_n * h_n`` over the phrase-table
features, the language-model log-probability, a word penalty (minus the
number of target words), distortion (minus the summed jump widths
``|start - previous_end - 1|``) and an OOV penalty (minus the number of
copied source words).  This is the log of the unnormalized numerator of the
log-linear model; the normalizer is constant per source sentence and does
not affect the argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..corpus import EOS
from ..lm import NGramModel
from .phrases import PhraseTable

DECODER_FEATURES = ("lm", "word_penalty", "distortion", "oov")


class LogLinearWeights:
    """Named feature weights."""

    def __init__(self, names: Sequence[str], values: Sequence[float]):
        names, values = tuple(names), tuple(float(v) for v in values)
        if len(names) != len(values):
            raise ValueError("one weight per feature name required")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("weights must be finite")
        self.names = names
        self.values = values

    @classmethod
    def default(cls, table_features: Sequence[str]) -> "LogLinearWeights":
        base = {"log_p_e_given_f": 0.2, "log_p_f_given_e": 0.2, "log_lex_e_given_f": 0.2,
                "log_lex_f_given_e": 0.2, "phrase_penalty": 0.0,
                "lm": 0.5, "word_penalty": -0.5, "distortion": 0.3, "oov": 1.0}
        names = full_feature_names(table_features)
        return cls(names, [base.get(n, 0.1) for n in names])

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)

    def scaled(self, factor: float) -> "LogLinearWeights":
        return LogLinearWeights(self.names, [v * factor for v in self.values])

    def replace(self, values) -> "LogLinearWeights":
        return LogLinearWeights(self.names, list(values))

    def __eq__(self, other) -> bool:
        return isinstance(other, LogLinearWeights) and (self.names, self.values) == (other.names, other.values)

    def __repr__(self) -> str:
        pairs = ", ".join(f"{n}={v:g}" for n, v in zip(self.names, self.values))
        return f"LogLinearWeights({pairs})"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for n, v in zip(self.names, self.values):
                fh.write(f"{n}\t{v!r}\n")

    @classmethod
    def load(cls, path) -> "LogLinearWeights":
        names, values = [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    n, v = line.rstrip("\n").split("\t")
                    names.append(n)
                    values.append(float(v))
        return cls(names, values)


def full_feature_names(table_features: Sequence[str]) -> tuple:
    return tuple(table_features) + DECODER_FEATURES


@dataclass(frozen=True)
class Hypothesis:
    coverage: int           # bitmask over source positions
    last_end: int           # last covered source position of the previous phrase
    lm_state: tuple
    target: tuple
    score: float
    features: tuple
    backpointer: "Hypothesis | None" = None
    source_span: tuple = ()


class DecodeResult(NamedTuple):
    translation: tuple
    nbest: list      # [(target, score, feature_vector)]

    @property
    def score(self) -> float:
        return self.nbest[0][1] if self.nbest else 0.0


def _options(sentence, table: PhraseTable, oov_features: tuple, lam_tab):
    """Translation options grouped by start position.

    Each option is ``(start, end, target, features, is_oov, weighted_score)``.
    """
    n = len(sentence)
    max_len = max(table.max_source_len, 1)
    by_start = {}
    for i in range(n):
        opts = by_start.setdefault(i, [])
        for j in range(i + 1, min(n, i + max_len) + 1):
            for pp in table.get(sentence[i:j]):
                opts.append((i, j, pp.target, pp.features, False,
                             sum(l * h for l, h in zip(lam_tab, pp.features))))
        if not table.get(sentence[i:i + 1]):
            opts.append((i, i + 1, (sentence[i],), oov_features, True,
                         sum(l * h for l, h in zip(lam_tab, oov_features))))
    return by_start


def decode(sentence: Sequence[str], table: PhraseTable, lm: NGramModel,
           weights: LogLinearWeights, beam_size: int | None = 100,
           distortion_limit: int | None = 6, nbest: int = 1) -> DecodeResult:
    """Beam search over stacks indexed by the number of covered source words.

    ``beam_size=None`` and ``distortion_limit=None`` mean unbounded.  Source
    words without a single-word phrase entry are copied to the output
    verbatim with an OOV penalty.  Hypotheses sharing coverage, last
    position and LM state are recombined; with ``nbest > 1`` up to that
    many distinct target strings survive per recombination state.
    """
    sentence = tuple(sentence)
    if beam_size is not None and beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    if distortion_limit is not None and distortion_limit < 0:
        raise ValueError("distortion_limit must be >= 0")
    names = full_feature_names(table.feature_names)
    if tuple(weights.names) != names:
        raise ValueError(f"weights {weights.names} do not match features {names}")
    n = len(sentence)
    if n == 0:
        return DecodeResult((), [((), 0.0, (0.0,) * len(names))])

    lam = weights.values
    n_tab = len(table.feature_names)
    lam_tab, (lam_lm, lam_wp, lam_dist, lam_oov) = lam[:n_tab], lam[n_tab:]
    oov_feats = tuple(1.0 if f == "phrase_penalty" else 0.0 for f in table.feature_names)
    by_start = _options(sentence, table, oov_feats, lam_tab)
    full = (1 << n) - 1
    per_state = max(1, nbest)

    stacks = [dict() for _ in range(n + 1)]
    init = Hypothesis(0, -1, lm.initial_state(), (), 0.0, (0.0,) * len(names))
    stacks[0][(0, -1, init.lm_state)] = [init]

    for k in range(n):
        hyps = [h for group in stacks[k].values() for h in group]
        hyps.sort(key=_rank)
        if beam_size is not None:
            hyps = hyps[:beam_size]
        for hyp in hyps:
            for start in range(n):
                if hyp.coverage >> start & 1:
                    continue
                jump = abs(start - hyp.last_end - 1)
                if distortion_limit is not None and jump > distortion_limit:
                    continue
                for i, j, tgt, feats, is_oov, tab_score in by_start[start]:
                    span = ((1 << j) - 1) ^ ((1 << i) - 1)
                    if hyp.coverage & span:
                        continue
                    cov = hyp.coverage | span
                    state = hyp.lm_state
                    lm_lp = 0.0
                    for w in tgt:
                        lm_lp += lm.logprob(w, state)
                        state = lm.advance(state, w)
                    if cov == full:
                        lm_lp += lm.logprob(EOS, state)
                    delta = (tab_score + lam_lm * lm_lp - lam_wp * len(tgt)
                             - lam_dist * jump - (lam_oov if is_oov else 0.0))
                    hf = hyp.features
                    new_feats = tuple(a + b for a, b in zip(hf[:n_tab], feats)) + (
                        hf[n_tab] + lm_lp, hf[n_tab + 1] - len(tgt), hf[n_tab + 2] - jump,
                        hf[n_tab + 3] - (1.0 if is_oov else 0.0))
                    new = Hypothesis(cov, j - 1, state, hyp.target + tgt, hyp.score + delta,
                                     new_feats, hyp, (i, j))
                    _recombine(stacks[k + j - i], (cov, j - 1, state), new, per_state)

    final = [h for group in stacks[n].values() for h in group]
    if not final:
        # every surviving partial hypothesis hit the distortion limit
        return decode(sentence, table, lm, weights, beam_size, 0, nbest)
    final.sort(key=_rank)
    out, seen = [], set()
    for h in final:
        if h.target in seen:
            continue
        seen.add(h.target)
        out.append((h.target, h.score, h.features))
        if len(out) >= max(1, nbest):
            break
    return DecodeResult(out[0][0], out)


def _rank(h: Hypothesis):
    # equal scores prefer less reordering, then the smaller target string
    return -h.score, -h.features[-2], h.target


def _recombine(stack: dict, key, hyp: Hypothesis, per_state: int) -> None:
    group = stack.get(key)
    if group is None:
        stack[key] = [hyp]
        return
    for idx, other in enumerate(group):
        if other.target == hyp.target:
            if hyp.score > other.score:
                group[idx] = hyp
            return
    if len(group) < per_state:
        group.append(hyp)
    else:
        worst = min(range(len(group)), key=lambda i: group[i].score)
        if hyp.score > group[worst].score:
            group[worst] = hyp
