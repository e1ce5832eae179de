import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from premt.bpe import MergeTable, apply_bpe, learn_bpe, undo_bpe
from premt.combine import (CombineError, MarkingScheme, MixedInput, PreTranslationMT, StageError,
                           apply_bpe_marked, build_mixed_input, mixed_translate, pipeline_translate,
                           pretranslate_corpus, unmark)
from premt.corpus import ParallelCorpus
from premt.eval import bleu
from premt.lm import train_lm
from premt.nmt import AttentionNMT
from premt.smt.phrases import PhrasePair, PhraseTable
from premt.smt.system import PhraseBasedMT

words = st.text(alphabet="abcxyz", min_size=1, max_size=5)
sentences = st.lists(words, min_size=1, max_size=5).map(tuple)


def upper_smt(words="abcd", extra=()):
    pairs = [PhrasePair((w,), (w.upper(),), (0.0, 0.0, 0.0, 0.0, 1.0), 2) for w in words]
    table = PhraseTable(pairs + list(extra))
    lm = train_lm([tuple(w.upper() for w in words)], 2)
    return PhraseBasedMT.from_components(table, lm, distortion_limit=0)


def test_marking_example():
    mixed = build_mixed_input(("the", "goalie"), ("der", "Torwart"))
    assert mixed.tokens == ("D_der", "D_Torwart", "E_the", "E_goalie")
    assert mixed.boundary == 2


def test_single_tokens():
    assert len(build_mixed_input(("a",), ("b",)).tokens) == 2


def test_split_inverts():
    mixed = build_mixed_input(("the", "goalie"), ("der", "Torwart"))
    assert mixed.split() == (("the", "goalie"), ("der", "Torwart"))


def test_prefixed_input_rejected():
    with pytest.raises(CombineError):
        build_mixed_input(("E_x",), ("y",))
    with pytest.raises(CombineError):
        build_mixed_input(("x",), ("D_y",))
    with pytest.raises(CombineError):
        build_mixed_input((), ("y",))


@pytest.mark.parametrize("a,b", [("", "E_"), ("D_", "D_"), ("D", "D_"), ("XE_", "XE")])
def test_bad_schemes(a, b):
    with pytest.raises(CombineError):
        MarkingScheme(a, b)


def test_boundary_checked():
    with pytest.raises(CombineError):
        MixedInput(("D_a",), 2)


@given(sentences, sentences)
def test_mixed_input_properties(src, pre):
    mixed = build_mixed_input(src, pre)
    part1, part2 = set(mixed.tokens[:mixed.boundary]), set(mixed.tokens[mixed.boundary:])
    assert not part1 & part2
    assert len(mixed.tokens) == len(src) + len(pre)
    assert mixed.boundary == len(pre)
    assert mixed.split() == (src, pre)


@given(sentences, st.sampled_from(["D_", "E_"]))
def test_unmark_inverts_mark(sentence, prefix):
    scheme = MarkingScheme()
    assert unmark(scheme.mark(sentence, prefix), prefix) == sentence


@given(sentences, sentences, st.integers(0, 20))
def test_marked_bpe_round_trip(src, pre, k):
    merges = learn_bpe([src, pre], k)
    mixed = build_mixed_input(src, pre)
    units = apply_bpe_marked(mixed.tokens, merges)
    assert undo_bpe(units) == mixed.tokens
    heads = [u for u in units if u.startswith(("D_", "E_"))]
    assert len(heads) == len(mixed.tokens)


def test_marked_bpe_matches_unmarked_segmentation():
    merges = MergeTable((("a", "b"),))
    assert apply_bpe_marked(("D_abc", "E_ab"), merges) == ("D_ab@@", "c", "E_ab")
    assert apply_bpe(("abc",), merges) == ("ab@@", "c")


def test_pretranslate_identity_channel():
    corpus = ParallelCorpus.from_sides([("a", "b"), ("c",)], [("A", "B"), ("C",)])
    pre = pretranslate_corpus(corpus, upper_smt())
    assert list(pre.sources) == [("A", "B"), ("C",)]
    assert list(pre.targets) == list(corpus.targets)


def test_pretranslate_filter_falls_back_to_copy():
    singleton = PhrasePair(("q",), ("Q",), (0.0, 0.0, 0.0, 0.0, 1.0), 1)
    smt = upper_smt(extra=[singleton])
    corpus = ParallelCorpus.from_sides([("a", "q")], [("A", "Q")])
    assert pretranslate_corpus(corpus, smt).sources == [("A", "Q")]
    assert pretranslate_corpus(corpus, smt, filter=True).sources == [("A", "q")]


def test_pretranslate_reports_sentence_index():
    class Broken:
        def decode(self, s):
            if s == ("b",):
                raise RuntimeError("boom")
            return upper_smt().decode(s)

    corpus = ParallelCorpus.from_sides([("a",), ("b",)], [("A",), ("B",)])
    with pytest.raises(StageError) as err:
        pretranslate_corpus(corpus, Broken())
    assert err.value.stage == "pbmt" and err.value.index == 1
    assert str(err.value) == "pbmt (sentence 1): boom"


def test_filtering_lowers_training_bleu():
    from premt.synthetic import rare_word_corpus
    corpus = rare_word_corpus(seed=3, n_train=600, n_entities=20, n_background=60, n_hapax=30).train
    smt = PhraseBasedMT(distortion_limit=0).fit(corpus)
    plain = bleu(pretranslate_corpus(corpus, smt).sources, corpus.targets).bleu
    filtered = bleu(pretranslate_corpus(corpus, smt, filter=True).sources, corpus.targets).bleu
    assert filtered <= plain


# -- trained combinations ------------------------------------------------------------------

COPY = [(("a", "b"), ("A", "B")), (("b", "a"), ("B", "A")), (("c", "a"), ("C", "A")),
        (("d", "c", "b"), ("D", "C", "B")), (("a", "d"), ("A", "D")), (("b", "c", "d"), ("B", "C", "D"))]


def tiny_nmt(**kw):
    params = dict(embed_dim=8, hidden_dim=24, learning_rate=1e-2, batch_size=6,
                  max_iterations=400, checkpoint_interval=400) | kw
    return AttentionNMT(**params)


@pytest.fixture(scope="module")
def mono_identity():
    """Monolingual NMT trained to copy uppercase sentences."""
    tgts = [t for _, t in COPY]
    return tiny_nmt().fit(tgts, tgts)


def test_pipeline_of_identities(mono_identity):
    smt = upper_smt()
    for src, tgt in COPY:
        assert pipeline_translate(src, smt, mono_identity) == tgt


def test_pipeline_is_stagewise_composition(mono_identity):
    smt = upper_smt()
    for src, _ in COPY:
        manual = mono_identity.predict([smt.decode(src).translation])[0]
        assert pipeline_translate(src, smt, mono_identity) == manual


def test_pipeline_with_empty_table_is_mono_nmt(mono_identity):
    empty = PhraseBasedMT.from_components(PhraseTable([]), train_lm([("A",)], 2), distortion_limit=0)
    for src in [("A", "B"), ("C", "D", "A")]:
        assert pipeline_translate(src, empty, mono_identity) == mono_identity.predict([src])[0]


def test_pipeline_learns_to_fix_systematic_errors():
    # the phrase-based stage swaps every "B" for "X"; the network learns to undo it
    noisy = upper_smt(words="acd", extra=[PhrasePair(("b",), ("X",), (0.0,) * 4 + (1.0,), 2)])
    corpus = ParallelCorpus.from_sides([s for s, _ in COPY], [t for _, t in COPY])
    pre = pretranslate_corpus(corpus, noisy)
    mono = tiny_nmt().fit(pre.sources, pre.targets)
    assert all(pipeline_translate(s, noisy, mono) == t for s, t in COPY)


def test_pipeline_tags_failing_stage(mono_identity):
    class Broken:
        def decode(self, s):
            raise RuntimeError("no")
    with pytest.raises(StageError) as err:
        pipeline_translate(("a",), Broken(), mono_identity)
    assert err.value.stage == "pbmt"


@pytest.fixture(scope="module")
def mixed_model():
    model = PreTranslationMT("mixed", smt=PhraseBasedMT(distortion_limit=0), nmt=tiny_nmt(),
                             bpe_merges=0)
    return model.fit([s for s, _ in COPY], [t for _, t in COPY])


def test_mixed_overfits_when_pretranslation_is_exact(mixed_model):
    smt = upper_smt()
    for src, tgt in COPY:
        assert mixed_model.translate(src, smt).translation == tgt


def test_mixed_attention_covers_both_parts(mixed_model):
    smt = upper_smt()
    res = mixed_translate(COPY[3][0], smt, mixed_model.nmt_, mixed_model.merges_)
    assert res.attention.shape == (len(res.output_units) + 1, len(res.units))
    np.testing.assert_allclose(res.attention.sum(axis=1), 1.0, atol=1e-6)
    total = res.attention.sum(axis=0)
    assert total[:res.boundary].sum() > 0 and total[res.boundary:].sum() > 0
    assert res.units[:res.boundary] == ("D_D", "D_C", "D_B")
    assert res.units[res.boundary:] == ("E_d", "E_c", "E_b")


def test_smt_can_be_swapped_at_test_time(mixed_model):
    # a different phrase-based system is used only when translating
    other = upper_smt(words="abcd")
    assert mixed_model.translate(("a", "b"), other).translation == ("A", "B")


def test_network_input_shapes(mixed_model):
    assert mixed_model.network_input(("a",), ("A",)) == ("D_A", "E_a")
    pipe = PreTranslationMT("pipeline")
    pipe.merges_ = MergeTable(())
    assert pipe.network_input(("a",), ("AB",)) == ("A@@", "B")


def test_pipeline_mode_estimator():
    model = PreTranslationMT("pipeline", smt=PhraseBasedMT(distortion_limit=0), nmt=tiny_nmt(),
                             bpe_merges=2)
    model.fit([s for s, _ in COPY], [t for _, t in COPY])
    res = model.translate(("a", "b"))
    assert res.boundary == len(res.units)
    assert len(model.predict([("a",), ("b", "c")])) == 2


def test_bad_mode_and_prefixed_corpus():
    with pytest.raises(ValueError):
        PreTranslationMT("serial").fit([("a",)], [("A",)])
    with pytest.raises(CombineError):
        PreTranslationMT("mixed").fit([("E_a",)], [("A",)])
