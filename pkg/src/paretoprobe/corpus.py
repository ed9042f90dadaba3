"""CoNLL-U treebanks, per-task datasets, and their shuffled variants."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np

POSL = "posl"
DAL = "dal"
PARSE = "parse"
TASKS = (POSL, DAL, PARSE)

TRAIN = "train"
DEV = "dev"
TEST = "test"

# 0-based indices into the 10 tab-separated CoNLL-U columns.
_ID, _FORM, _UPOS, _HEAD, _DEPREL = 0, 1, 3, 6, 7


class ConlluParseError(ValueError):
    """Malformed CoNLL-U input; carries the 1-based offending line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class Token:
    """One syntactic word. ``head`` is the 1-based head index, 0 for the root."""

    form: str
    upos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    sent_index: int

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    @property
    def forms(self) -> tuple[str, ...]:
        return tuple(t.form for t in self.tokens)

    @property
    def heads(self) -> tuple[int, ...]:
        return tuple(t.head for t in self.tokens)


@dataclass(frozen=True)
class Treebank:
    split: str
    language: str
    sentences: tuple[Sentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def tokens(self) -> Iterator[tuple[Sentence, int, Token]]:
        """Yield (sentence, position, token) over the whole treebank."""
        for sentence in self.sentences:
            for position, token in enumerate(sentence.tokens):
                yield sentence, position, token


def parse_conllu(text: str, split: str = TRAIN, language: str = "und") -> Treebank:
    """Parse CoNLL-U text into a Treebank.

    Comment lines, multiword-token ranges (``3-4``) and empty nodes (``5.1``)
    are skipped. Ten tab-separated columns are required on token lines; FORM,
    UPOS, HEAD and DEPREL are retained. Errors report 1-based line numbers.
    """
    sentences: list[Sentence] = []
    pending: list[tuple[int, list[str]]] = []

    def flush() -> None:
        if pending:
            sentences.append(_build_sentence(pending, len(sentences)))
            pending.clear()

    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConlluParseError(
                line_number,
                f"expected 10 tab-separated columns, got {len(columns)}",
            )
        token_id = columns[_ID]
        if "-" in token_id or "." in token_id:
            continue  # multiword range / empty node: not syntactic words
        if not token_id.isdigit():
            raise ConlluParseError(line_number, f"invalid token ID {token_id!r}")
        pending.append((line_number, columns))
    flush()
    return Treebank(split=split, language=language, sentences=tuple(sentences))


def _build_sentence(rows: list[tuple[int, list[str]]], sent_index: int) -> Sentence:
    length = len(rows)
    tokens: list[Token] = []
    for position, (line_number, columns) in enumerate(rows):
        if int(columns[_ID]) != position + 1:
            raise ConlluParseError(
                line_number,
                f"token IDs must be contiguous from 1, got {columns[_ID]}",
            )
        form = columns[_FORM]
        if not form:
            raise ConlluParseError(line_number, "empty FORM column")
        head_text = columns[_HEAD]
        try:
            head = int(head_text)
        except ValueError:
            raise ConlluParseError(
                line_number, f"non-integer HEAD {head_text!r}"
            ) from None
        if head < 0 or head > length:
            raise ConlluParseError(
                line_number,
                f"HEAD {head} out of range for sentence of length {length}",
            )
        if head == position + 1:
            raise ConlluParseError(line_number, "token may not be its own head")
        tokens.append(
            Token(form=form, upos=columns[_UPOS], head=head, deprel=columns[_DEPREL])
        )
    return Sentence(tokens=tuple(tokens), sent_index=sent_index)


def read_conllu(path: str, split: str = TRAIN, language: str = "und") -> Treebank:
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle.read(), split=split, language=language)


def serialize_conllu(treebank: Treebank) -> str:
    """Render a treebank as CoNLL-U; unknown columns are written as ``_``.

    Parsing the result reproduces the same FORM/UPOS/HEAD/DEPREL values.
    """
    blocks = []
    for sentence in treebank.sentences:
        lines = []
        for position, token in enumerate(sentence.tokens):
            lines.append(
                "\t".join(
                    (
                        str(position + 1),
                        token.form,
                        "_",
                        token.upos,
                        "_",
                        "_",
                        str(token.head),
                        token.deprel,
                        "_",
                        "_",
                    )
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


class TokenRef(NamedTuple):
    """Points at one token: (sentence index, 0-based position)."""

    sent_index: int
    position: int


@dataclass(frozen=True)
class TaskDataset:
    """Instances of one probing task extracted from a treebank.

    Instance shapes per task:
      * posl:  ``(TokenRef, label)`` one per token
      * dal:   ``((head_ref, tail_ref), label)`` one per non-root arc
      * parse: ``(sent_index, heads)`` one per sentence, heads 1-based with 0 root

    ``label_set`` is lexicographically sorted and, on dev/test datasets,
    should be the train split's set (see :func:`with_label_set`); targets
    outside it are scored as errors, never dropped. Real corpora yield at
    least two labels; tiny fixtures may not.
    """

    task: str
    sentences: tuple[Sentence, ...]
    instances: tuple
    label_set: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.instances)


def extract_task(treebank: Treebank, task: str) -> TaskDataset:
    """Build the per-token / per-arc / per-sentence dataset for ``task``."""
    if task == POSL:
        instances = tuple(
            (TokenRef(sentence.sent_index, position), token.upos)
            for sentence, position, token in treebank.tokens()
        )
        labels = sorted({token.upos for _, _, token in treebank.tokens()})
    elif task == DAL:
        pairs = []
        labels_seen = set()
        for sentence, position, token in treebank.tokens():
            if token.head == 0:
                continue  # the root arc has no head token to represent
            head_ref = TokenRef(sentence.sent_index, token.head - 1)
            tail_ref = TokenRef(sentence.sent_index, position)
            pairs.append(((head_ref, tail_ref), token.deprel))
            labels_seen.add(token.deprel)
        instances = tuple(pairs)
        labels = sorted(labels_seen)
    elif task == PARSE:
        instances = tuple(
            (sentence.sent_index, sentence.heads) for sentence in treebank.sentences
        )
        labels = []
    else:
        raise ValueError(f"unknown task {task!r}")
    return TaskDataset(
        task=task,
        sentences=treebank.sentences,
        instances=instances,
        label_set=tuple(labels),
    )


def with_label_set(dataset: TaskDataset, label_set: tuple[str, ...]) -> TaskDataset:
    """Attach another split's label set (typically train's) to this dataset."""
    return replace(dataset, label_set=tuple(label_set))


def shuffle_labels(dataset: TaskDataset, seed: int) -> TaskDataset:
    """Destroy the form-target association while keeping both marginals.

    For posl/dal the targets are permuted uniformly across instances; for
    parse each sentence's head vector is permuted within the sentence. Inputs
    are untouched. Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    if dataset.task in (POSL, DAL):
        targets = [target for _, target in dataset.instances]
        order = rng.permutation(len(targets))
        shuffled = tuple(
            (inputs, targets[order[i]])
            for i, (inputs, _) in enumerate(dataset.instances)
        )
    elif dataset.task == PARSE:
        shuffled = tuple(
            (sent_index, tuple(heads[j] for j in rng.permutation(len(heads))))
            for sent_index, heads in dataset.instances
        )
    else:
        raise ValueError(f"unknown task {dataset.task!r}")
    return replace(dataset, instances=shuffled)


def _permute_forms(sentences: tuple[Sentence, ...], rng: np.random.Generator) -> tuple[Sentence, ...]:
    slots = [
        (sentence.sent_index, position)
        for sentence in sentences
        for position in range(len(sentence))
    ]
    forms = [
        sentence.tokens[position].form
        for sentence in sentences
        for position in range(len(sentence))
    ]
    order = rng.permutation(len(forms))
    assigned: dict[tuple[int, int], str] = {
        slots[i]: forms[order[i]] for i in range(len(slots))
    }
    rebuilt = []
    for sentence in sentences:
        tokens = tuple(
            replace(token, form=assigned[(sentence.sent_index, position)])
            for position, token in enumerate(sentence.tokens)
        )
        rebuilt.append(replace(sentence, tokens=tokens))
    return tuple(rebuilt)


def shuffle_inputs(dataset: TaskDataset, seed: int) -> TaskDataset:
    """Permute word forms globally across the corpus, leaving targets in place.

    Sentence lengths, target structure, and the corpus-level form distribution
    are preserved; local context is destroyed. Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    return replace(dataset, sentences=_permute_forms(dataset.sentences, rng))


def shuffle_treebank_inputs(treebank: Treebank, seed: int) -> Treebank:
    """Treebank-level version of :func:`shuffle_inputs` (same permutation)."""
    rng = np.random.default_rng(seed)
    return replace(treebank, sentences=_permute_forms(treebank.sentences, rng))
