import pytest

from embed_export import conllu

MIXED = """\
# sent_id = 1
# text = The cat sat
1\tThe\t_\tDET\t_\t_\t2\tdet\t_\t_
2\tcat\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_
3\tsat\t_\tVERB\t_\t_\t0\troot\t_\t_

1-2\tcannot\t_\t_\t_\t_\t_\t_\t_\t_
1\tcan\t_\tAUX\t_\t_\t3\taux\t_\t_
2\tnot\t_\tPART\t_\t_\t3\tadvmod\t_\t_
3\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_
3.1\telided\t_\tVERB\t_\t_\t_\t_\t_\t_
4\tnow\t_\tADV\t_\t_\t3\tadvmod\t_\t_
"""


def test_parse_skips_comments_ranges_and_empty_nodes():
    sentences = conllu.parse_sentences(MIXED)
    assert sentences == [["The", "cat", "sat"], ["can", "not", "go", "now"]]


def test_read_sentences_preserves_file_order(tmp_path):
    path = tmp_path / "t.conllu"
    path.write_text(MIXED, encoding="utf-8")
    assert conllu.read_sentences(str(path))[1] == ["can", "not", "go", "now"]


@pytest.mark.parametrize("line,match", [
    ("1\tword\tmissing-columns", "expected 10"),
    ("x\tword\t_\t_\t_\t_\t_\t_\t_\t_", "invalid token ID"),
    ("2\tword\t_\t_\t_\t_\t_\t_\t_\t_", "contiguous"),
    ("1\t\t_\t_\t_\t_\t_\t_\t_\t_", "empty FORM"),
])
def test_malformed_lines_are_rejected_with_line_numbers(line, match):
    with pytest.raises(conllu.ConlluError, match=match) as info:
        conllu.parse_sentences(line + "\n")
    assert "line 1" in str(info.value)


def test_trailing_sentence_without_blank_line():
    text = "1\tonly\t_\t_\t_\t_\t0\troot\t_\t_"
    assert conllu.parse_sentences(text) == [["only"]]
