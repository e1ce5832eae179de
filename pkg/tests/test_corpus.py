from collections import defaultdict

import pytest
from hypothesis import given
from hypothesis import strategies as st

from premt.corpus import (BOS, EOS, PAD, UNK, CorpusError, ParallelCorpus, Vocabulary,
                          build_vocabulary, check_sentence, load_corpus, read_sentences, tokenize)

words = st.text(alphabet="abcdexyz", min_size=1, max_size=4)
sentences = st.lists(words, min_size=1, max_size=6).map(tuple)


def write(tmp_path, name, text, mode="w"):
    path = tmp_path / name
    if isinstance(text, bytes):
        path.write_bytes(text)
    else:
        path.write_text(text, encoding="utf-8")
    return path


def test_load_two_pairs(tmp_path):
    corpus = load_corpus(write(tmp_path, "s", "a b\nc"), write(tmp_path, "t", "x\ny z"))
    assert list(corpus) == [(("a", "b"), ("x",)), (("c",), ("y", "z"))]


def test_line_count_mismatch_names_both_counts(tmp_path):
    with pytest.raises(CorpusError, match="3 != 2"):
        load_corpus(write(tmp_path, "s", "a\nb\nc\n"), write(tmp_path, "t", "x\ny\n"))


def test_whitespace_runs_collapse(tmp_path):
    assert read_sentences(write(tmp_path, "s", "  a   b \n")) == [("a", "b")]
    assert tokenize("\ta  b\t") == ("a", "b")


def test_trailing_blank_lines_ignored(tmp_path):
    corpus = load_corpus(write(tmp_path, "s", "a\nb\n\n\n"), write(tmp_path, "t", "x\ny\n"))
    assert len(corpus) == 2


def test_undecodable_bytes_report_line(tmp_path):
    with pytest.raises(CorpusError, match="line 2"):
        read_sentences(write(tmp_path, "s", b"ok\n\xff\xfe\n"))


@pytest.mark.parametrize("token", [UNK, BOS, EOS, PAD])
def test_reserved_tokens_rejected(tmp_path, token):
    with pytest.raises(CorpusError, match="line 1"):
        read_sentences(write(tmp_path, "s", f"a {token}\n"))


def test_marker_rejected_on_ingest(tmp_path):
    with pytest.raises(CorpusError):
        read_sentences(write(tmp_path, "s", "ab@@ c\n"))


def test_empty_sentence_rejected():
    with pytest.raises(CorpusError):
        ParallelCorpus.from_sides([("a",), ()], [("x",), ("y",)])


def test_check_sentence_rejects_bad_tokens():
    with pytest.raises(CorpusError):
        check_sentence(["a b"])
    with pytest.raises(CorpusError):
        check_sentence([""])


def test_vocabulary_example():
    vocab = build_vocabulary([("a", "a", "b")], min_count=1)
    assert vocab.tokens[:4] == (UNK, BOS, EOS, PAD)
    assert vocab.count("a") == 2 and vocab.count("b") == 1
    assert vocab.id("b") != vocab.unk_id


def test_vocabulary_min_count_keeps_counts():
    vocab = build_vocabulary([("a", "a", "b")], min_count=2)
    assert vocab.id("b") == vocab.unk_id
    assert vocab.count("b") == 1
    assert "b" not in vocab


def test_vocabulary_counts_match_independent_tally():
    corpus = ParallelCorpus.from_sides(
        [("s",), ("s", "t"), ("u",)],
        [("the", "cat", "the"), ("a", "cat"), ("the", "dog", "dog", "dog")])
    tally = defaultdict(int)
    for sent in ["the cat the", "a cat", "the dog dog dog"]:
        for tok in sent.split(" "):
            tally[tok] += 1
    vocab = build_vocabulary(corpus, "target")
    assert {t: vocab.count(t) for t in tally} == dict(tally)
    assert all(vocab.count(t) == 0 for t in ("s", "t", "u"))


def test_vocabulary_ids_dense_and_ordered():
    vocab = build_vocabulary([("b", "a", "a", "c", "c")])
    assert [vocab.id(t) for t in vocab.tokens] == list(range(len(vocab)))
    # frequency order, then alphabetical
    assert vocab.tokens[4:] == ("a", "c", "b")


@given(st.lists(sentences, min_size=1, max_size=8), st.integers(1, 3))
def test_vocabulary_round_trip(tmp_path_factory, sents, min_count):
    vocab = build_vocabulary(sents, min_count=min_count)
    path = tmp_path_factory.mktemp("v") / "vocab.txt"
    vocab.save(path)
    again = Vocabulary.load(path)
    assert again.tokens == vocab.tokens
    assert again.counts == vocab.counts


@given(st.lists(sentences, min_size=1, max_size=8))
def test_counts_sum_to_token_total(sents):
    vocab = build_vocabulary(sents)
    assert sum(vocab.counts.values()) == sum(len(s) for s in sents)


def test_encode_decode():
    vocab = build_vocabulary([("a", "b")])
    assert vocab.decode(vocab.encode(("a", "zzz", "b"))) == ("a", UNK, "b")
