"""Shared fixtures: small treebanks built by hand or generated with a seed."""

from __future__ import annotations

import numpy as np
import pytest

from paretoprobe import corpus

SMALL_CONLLU = """\
# sent_id = 1
# text = The cat sat
1\tThe\t_\tDET\t_\t_\t2\tdet\t_\t_
2\tcat\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_
3\tsat\t_\tVERB\t_\t_\t0\troot\t_\t_

# sent_id = 2
1-2\tcannot\t_\t_\t_\t_\t_\t_\t_\t_
1\tcan\t_\tAUX\t_\t_\t3\taux\t_\t_
2\tnot\t_\tPART\t_\t_\t3\tadvmod\t_\t_
3\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_
3.1\telided\t_\tVERB\t_\t_\t_\t_\t_\t_
4\tnow\t_\tADV\t_\t_\t3\tadvmod\t_\t_
"""


_criterion_results: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = getattr(item.function, "_criterion_name", None)
    if name is None or report.when != "call":
        return
    verdict = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    detail = ""
    if report.outcome == "skipped":  # longrepr is (path, lineno, reason)
        detail = f" ({str(report.longrepr[2]).removeprefix('Skipped: ')})"
    _criterion_results.append(f"ACCEPTANCE {verdict}: {name}{detail}")


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for line in _criterion_results:
        terminalreporter.write_line(line)


@pytest.fixture
def small_treebank() -> corpus.Treebank:
    return corpus.parse_conllu(SMALL_CONLLU, split="train", language="en")


def dataset_from_arrays(x: np.ndarray, labels) -> tuple:
    """POSL dataset of one-token sentences whose vectors are the rows of x.

    Returns (dataset, provider); word i is unique, so a type-level provider
    can pin vector i to row i exactly.
    """
    from paretoprobe import representations as reps

    sentences = tuple(
        corpus.Sentence(
            tokens=(corpus.Token(form=f"w{i}", upos=str(labels[i]), head=0,
                                 deprel="root"),),
            sent_index=i,
        )
        for i in range(len(labels))
    )
    treebank = corpus.Treebank(split="train", language="xx", sentences=sentences)
    dataset = corpus.extract_task(treebank, corpus.POSL)
    provider = reps.StaticFileProvider(
        tuple(f"w{i}" for i in range(len(labels))),
        np.asarray(x, dtype=np.float32),
        name="fixture-static",
    )
    return dataset, provider


_UPOS_TAGS = ("ADJ", "ADV", "DET", "NOUN", "PRON", "PROPN", "VERB")
_DEPRELS = ("advmod", "amod", "det", "nmod", "nsubj", "obj", "obl")


def make_treebank(
    n_sentences: int,
    min_len: int = 3,
    max_len: int = 9,
    vocab_size: int = 300,
    seed: int = 0,
    split: str = "train",
    language: str = "xx",
) -> corpus.Treebank:
    """Random but well-formed treebank: projective-free random heads, no cycles
    required, just the invariants (head in [0, len], head != self)."""
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(vocab_size)]
    sentences = []
    for sent_index in range(n_sentences):
        length = int(rng.integers(min_len, max_len + 1))
        root = int(rng.integers(0, length))
        tokens = []
        for position in range(length):
            if position == root:
                head = 0
                deprel = "root"
            else:
                head = int(rng.integers(1, length + 1))
                while head == position + 1:
                    head = int(rng.integers(1, length + 1))
                deprel = str(rng.choice(_DEPRELS))
            tokens.append(
                corpus.Token(
                    form=str(rng.choice(words)),
                    upos=str(rng.choice(_UPOS_TAGS)),
                    head=head,
                    deprel=deprel,
                )
            )
        sentences.append(corpus.Sentence(tokens=tuple(tokens), sent_index=sent_index))
    return corpus.Treebank(split=split, language=language, sentences=tuple(sentences))
