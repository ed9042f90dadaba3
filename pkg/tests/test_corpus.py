"""Treebank parsing, task extraction, and shuffling behavior."""

from collections import Counter

import pytest

from paretoprobe import corpus

from conftest import make_treebank

TWO_TOKEN = (
    "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n"
    "2\tcat\t_\tNOUN\t_\t_\t0\troot\t_\t_\n"
)


def test_parse_two_token_sentence():
    treebank = corpus.parse_conllu(TWO_TOKEN)
    assert len(treebank) == 1
    sentence = treebank.sentences[0]
    assert sentence.tokens == (
        corpus.Token(form="the", upos="DET", head=2, deprel="det"),
        corpus.Token(form="cat", upos="NOUN", head=0, deprel="root"),
    )


def test_parse_skips_comments_ranges_and_empty_nodes(small_treebank):
    assert len(small_treebank) == 2
    first, second = small_treebank.sentences
    assert first.forms == ("The", "cat", "sat")
    # the 1-2 range line and the 3.1 empty node are not tokens
    assert second.forms == ("can", "not", "go", "now")
    assert second.heads == (3, 3, 0, 3)


def test_parse_error_reports_line_number_for_missing_columns():
    text = "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tcat\t_\tNOUN\t_\t_\t0\troot\t_\n"
    with pytest.raises(corpus.ConlluParseError) as exc_info:
        corpus.parse_conllu(text)
    assert exc_info.value.line_number == 2
    assert "columns" in str(exc_info.value)


def test_parse_error_on_non_integer_head():
    text = "1\tthe\t_\tDET\t_\t_\tx\tdet\t_\t_\n"
    with pytest.raises(corpus.ConlluParseError) as exc_info:
        corpus.parse_conllu(text)
    assert exc_info.value.line_number == 1
    assert "HEAD" in str(exc_info.value)


def test_parse_error_on_head_out_of_range():
    text = "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n"
    with pytest.raises(corpus.ConlluParseError) as exc_info:
        corpus.parse_conllu(text)
    assert exc_info.value.line_number == 1
    assert "out of range" in str(exc_info.value)


def test_parse_error_on_self_head():
    text = "1\tthe\t_\tDET\t_\t_\t1\tdet\t_\t_\n2\tcat\t_\tNOUN\t_\t_\t0\troot\t_\t_\n"
    with pytest.raises(corpus.ConlluParseError) as exc_info:
        corpus.parse_conllu(text)
    assert exc_info.value.line_number == 1


def test_parse_error_on_non_contiguous_ids():
    text = "1\tthe\t_\tDET\t_\t_\t0\troot\t_\t_\n3\tcat\t_\tNOUN\t_\t_\t1\tdet\t_\t_\n"
    with pytest.raises(corpus.ConlluParseError) as exc_info:
        corpus.parse_conllu(text)
    assert exc_info.value.line_number == 2


def test_round_trip_preserves_retained_columns(small_treebank):
    text = corpus.serialize_conllu(small_treebank)
    reparsed = corpus.parse_conllu(text, split="train", language="en")
    assert reparsed.sentences == small_treebank.sentences
    assert corpus.serialize_conllu(reparsed) == text


def test_round_trip_on_generated_treebank():
    treebank = make_treebank(40, seed=7)
    reparsed = corpus.parse_conllu(corpus.serialize_conllu(treebank))
    for original, copy in zip(treebank.sentences, reparsed.sentences):
        assert original.tokens == copy.tokens


def test_extract_posl():
    dataset = corpus.extract_task(corpus.parse_conllu(TWO_TOKEN), corpus.POSL)
    assert len(dataset) == 2
    assert dataset.label_set == ("DET", "NOUN")
    (ref_a, label_a), (ref_b, label_b) = dataset.instances
    assert (ref_a, label_a) == (corpus.TokenRef(0, 0), "DET")
    assert (ref_b, label_b) == (corpus.TokenRef(0, 1), "NOUN")


def test_extract_dal_excludes_root_arc():
    dataset = corpus.extract_task(corpus.parse_conllu(TWO_TOKEN), corpus.DAL)
    assert len(dataset) == 1
    (head_ref, tail_ref), label = dataset.instances[0]
    assert head_ref == corpus.TokenRef(0, 1)  # cat
    assert tail_ref == corpus.TokenRef(0, 0)  # the
    assert label == "det"
    assert dataset.label_set == ("det",)


def test_extract_parse_head_vectors(small_treebank):
    dataset = corpus.extract_task(small_treebank, corpus.PARSE)
    assert dataset.instances == ((0, (2, 3, 0)), (1, (3, 3, 0, 3)))
    assert dataset.label_set == ()


def test_label_set_is_sorted_and_attachable(small_treebank):
    dataset = corpus.extract_task(small_treebank, corpus.POSL)
    assert list(dataset.label_set) == sorted(dataset.label_set)
    other = corpus.with_label_set(dataset, ("A", "B"))
    assert other.label_set == ("A", "B")
    assert other.instances == dataset.instances


def test_shuffle_labels_preserves_frequencies_exactly():
    treebank = make_treebank(300, seed=1)
    dataset = corpus.extract_task(treebank, corpus.POSL)
    shuffled = corpus.shuffle_labels(dataset, seed=5)
    before = Counter(label for _, label in dataset.instances)
    after = Counter(label for _, label in shuffled.instances)
    assert before == after
    assert [ref for ref, _ in shuffled.instances] == [
        ref for ref, _ in dataset.instances
    ]


def test_shuffle_labels_is_deterministic():
    dataset = corpus.extract_task(make_treebank(50, seed=2), corpus.DAL)
    assert corpus.shuffle_labels(dataset, seed=9) == corpus.shuffle_labels(dataset, seed=9)
    assert corpus.shuffle_labels(dataset, seed=9) != corpus.shuffle_labels(dataset, seed=10)


def test_shuffle_labels_parse_permutes_within_sentence():
    dataset = corpus.extract_task(make_treebank(40, seed=3), corpus.PARSE)
    shuffled = corpus.shuffle_labels(dataset, seed=4)
    changed = 0
    for (idx_a, heads_a), (idx_b, heads_b) in zip(dataset.instances, shuffled.instances):
        assert idx_a == idx_b
        assert sorted(heads_a) == sorted(heads_b)
        changed += heads_a != heads_b
    assert changed > 0


def test_shuffle_inputs_preserves_structure_and_form_multiset():
    treebank = make_treebank(100, seed=6)
    dataset = corpus.extract_task(treebank, corpus.POSL)
    shuffled = corpus.shuffle_inputs(dataset, seed=11)
    assert shuffled.instances == dataset.instances
    assert [len(s) for s in shuffled.sentences] == [len(s) for s in dataset.sentences]
    before = Counter(f for s in dataset.sentences for f in s.forms)
    after = Counter(f for s in shuffled.sentences for f in s.forms)
    assert before == after
    # targets stay attached to positions
    for old, new in zip(dataset.sentences, shuffled.sentences):
        assert [t.upos for t in old.tokens] == [t.upos for t in new.tokens]
        assert old.heads == new.heads


def test_shuffle_treebank_inputs_matches_dataset_shuffle():
    treebank = make_treebank(60, seed=8)
    dataset = corpus.extract_task(treebank, corpus.POSL)
    via_dataset = corpus.shuffle_inputs(dataset, seed=3)
    via_treebank = corpus.shuffle_treebank_inputs(treebank, seed=3)
    assert via_dataset.sentences == via_treebank.sentences


def test_shuffle_treebank_serialization_is_byte_identical_per_seed():
    treebank = make_treebank(60, seed=12)
    text_a = corpus.serialize_conllu(corpus.shuffle_treebank_inputs(treebank, seed=2))
    text_b = corpus.serialize_conllu(corpus.shuffle_treebank_inputs(treebank, seed=2))
    assert text_a == text_b
