import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from premt.corpus import ParallelCorpus
from premt.smt.align import (NULL, LexicalTable, align_viterbi, ibm1_log_likelihood, symmetrize,
                             train_ibm1, word_align)

from oracles import ibm1_em

pair_lists = st.lists(
    st.tuples(st.lists(st.sampled_from("abcd"), min_size=1, max_size=4).map(tuple),
              st.lists(st.sampled_from("wxyz"), min_size=1, max_size=4).map(tuple)),
    min_size=1, max_size=6)


def corpus_of(pairs):
    return ParallelCorpus.from_sides([s for s, _ in pairs], [t for _, t in pairs])


def assert_stochastic(lex, tol=1e-9):
    for f, total in lex.totals().items():
        assert abs(total - 1.0) <= tol, (f, total)


def test_single_pair_is_normalized():
    # with a single target type every source word (NULL included) puts all
    # its mass on it
    lex = train_ibm1(corpus_of([(("a",), ("x",))]), 1)
    assert lex.t("x", "a") == 1.0 and lex.t("x", NULL) == 1.0
    assert_stochastic(lex)


def test_three_pair_example_against_oracle():
    pairs = [(("a",), ("x",)), (("a", "b"), ("x", "y")), (("b",), ("y",))]
    lex = train_ibm1(corpus_of(pairs), 5)
    oracle = ibm1_em(pairs, 5)
    assert lex.t("x", "a") > lex.t("y", "a")
    for (f, e), p in oracle.items():
        assert abs(lex.t(e, f) - p) < 1e-12


@given(pair_lists, st.integers(1, 4))
def test_matches_independent_em(pairs, iterations):
    lex = train_ibm1(corpus_of(pairs), iterations)
    for (f, e), p in ibm1_em(pairs, iterations).items():
        assert abs(lex.t(e, f) - p) < 1e-10


@given(pair_lists)
def test_stochastic_and_likelihood_nondecreasing(pairs):
    history = []
    lex = train_ibm1(corpus_of(pairs), 4, history=history)
    assert_stochastic(lex)
    for earlier, later in zip(history, history[1:]):
        assert later >= earlier - 1e-9


def test_likelihood_helper_matches_history():
    corpus = corpus_of([(("a", "b"), ("x", "y")), (("a",), ("x",))])
    history = []
    lex = train_ibm1(corpus, 2, history=history)
    assert math.isclose(history[-1], ibm1_log_likelihood(corpus, lex), rel_tol=1e-12)


def test_errors():
    with pytest.raises(ValueError):
        train_ibm1(ParallelCorpus(()), 1)
    with pytest.raises(ValueError):
        train_ibm1(corpus_of([(("a",), ("x",))]), 0)


def test_viterbi_argmax_example():
    lex = LexicalTable({("a", "x"): 0.9, (NULL, "x"): 0.1})
    assert align_viterbi((("a",), ("x",)), lex) == [(0, 0)]


def test_viterbi_tie_goes_left():
    lex = LexicalTable({("a", "x"): 0.5, ("b", "x"): 0.5})
    assert align_viterbi((("a", "b"), ("x",)), lex) == [(0, 0)]


def test_viterbi_null_wins_only_when_strictly_better():
    lex = LexicalTable({("a", "x"): 0.2, (NULL, "x"): 0.6, ("a", "y"): 0.3, (NULL, "y"): 0.3})
    assert align_viterbi((("a",), ("x", "y")), lex) == [(0, 1)]


def test_viterbi_matches_exhaustive_enumeration():
    pairs = [(("a", "b", "c"), ("x", "y", "z")), (("c", "a", "b"), ("z", "y", "x")),
             (("b", "c"), ("y", "x", "z"))]
    lex = train_ibm1(corpus_of(pairs), 3)
    for src, tgt in pairs:
        choices = list(range(len(src))) + [None]   # NULL last: it must win strictly
        best, best_p = None, -1.0
        for assign in itertools.product(choices, repeat=len(tgt)):
            p = 1.0
            for j, i in enumerate(assign):
                p *= lex.t(tgt[j], NULL if i is None else src[i])
            if p > best_p + 1e-15:
                best, best_p = assign, p
        expected = sorted((i, j) for j, i in enumerate(best) if i is not None)
        assert align_viterbi((src, tgt), lex) == expected


def test_symmetrize_intersects():
    assert symmetrize([(0, 0), (1, 1), (0, 1)], [(0, 0), (1, 1)]) == [(0, 0), (1, 1)]


def test_word_align_recovers_diagonal():
    pairs = [(("a", "b"), ("x", "y")), (("a",), ("x",)), (("b",), ("y",)), (("b", "a"), ("y", "x"))]
    alignments, fwd, bwd = word_align(corpus_of(pairs), 5)
    assert alignments[0] == [(0, 0), (1, 1)]
    assert alignments[3] == [(0, 0), (1, 1)]
    assert_stochastic(fwd)
    assert_stochastic(bwd)
