"""Task metrics and deterministic dictionary-lookup baselines.

The lookup models memorize per-key most-frequent labels from the train split
and back off through coarser keys at prediction time. Ties break to the
lexicographically smallest label so repeated runs are identical.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import DAL, POSL, TaskDataset


def accuracy(predictions, golds) -> float:
    """Fraction of exact matches between two equal-length sequences."""
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions, {len(golds)} golds"
        )
    if not golds:
        raise ValueError("accuracy of empty sequences is undefined")
    return sum(p == g for p, g in zip(predictions, golds)) / len(golds)


def uas(pred_heads, gold_heads) -> float:
    """Micro-averaged unlabeled attachment score over per-sentence head vectors."""
    if len(pred_heads) != len(gold_heads):
        raise ValueError(
            f"length mismatch: {len(pred_heads)} predicted sentences, "
            f"{len(gold_heads)} gold"
        )
    correct = 0
    total = 0
    for index, (pred, gold) in enumerate(zip(pred_heads, gold_heads)):
        pred = np.asarray(pred)
        gold = np.asarray(gold)
        if pred.shape != gold.shape:
            raise ValueError(
                f"sentence {index}: {pred.shape[0]} predicted heads, "
                f"{gold.shape[0]} gold"
            )
        correct += int(np.sum(pred == gold))
        total += len(gold)
    if total == 0:
        raise ValueError("uas of empty sequences is undefined")
    return correct / total


def _most_frequent(counter: Counter) -> str:
    # highest count, then lexicographically smallest label
    return min(counter.items(), key=lambda item: (-item[1], item[0]))[0]


def _resolve(counts: dict) -> dict:
    return {key: _most_frequent(counter) for key, counter in counts.items()}


@dataclass(frozen=True)
class LookupTable:
    """Most-frequent-label maps tried in order, with a global fallback.

    ``levels[i]`` is consulted with ``keys[i]``; the first hit wins and the
    global most-frequent label covers everything else.
    """

    levels: tuple[dict, ...]
    fallback: str

    def predict(self, keys) -> str:
        for level, key in zip(self.levels, keys):
            label = level.get(key)
            if label is not None:
                return label
        return self.fallback


def _form_of(dataset: TaskDataset):
    sentences = {s.sent_index: s for s in dataset.sentences}

    def form(ref):
        return sentences[ref.sent_index].tokens[ref.position].form

    return form


def _check_task(train: TaskDataset, eval: TaskDataset, task: str) -> None:
    for role, dataset in (("train", train), ("eval", eval)):
        if dataset.task != task:
            raise ValueError(f"{role} dataset has task {dataset.task!r}, need {task!r}")


def build_posl_table(train: TaskDataset) -> LookupTable:
    """Word form -> most frequent tag; out-of-vocabulary -> global tag."""
    form = _form_of(train)
    by_word: dict[str, Counter] = {}
    overall: Counter = Counter()
    for ref, label in train.instances:
        by_word.setdefault(form(ref), Counter())[label] += 1
        overall[label] += 1
    return LookupTable(levels=(_resolve(by_word),), fallback=_most_frequent(overall))


def build_dal_table(train: TaskDataset) -> LookupTable:
    """Arc -> tail word -> head word -> global, each most-frequent by count."""
    form = _form_of(train)
    by_arc: dict[tuple[str, str], Counter] = {}
    by_tail: dict[str, Counter] = {}
    by_head: dict[str, Counter] = {}
    overall: Counter = Counter()
    for (head_ref, tail_ref), label in train.instances:
        head_form = form(head_ref)
        tail_form = form(tail_ref)
        by_arc.setdefault((head_form, tail_form), Counter())[label] += 1
        by_tail.setdefault(tail_form, Counter())[label] += 1
        by_head.setdefault(head_form, Counter())[label] += 1
        overall[label] += 1
    return LookupTable(
        levels=(_resolve(by_arc), _resolve(by_tail), _resolve(by_head)),
        fallback=_most_frequent(overall),
    )


def lookup_posl(train: TaskDataset, eval: TaskDataset) -> float:
    """Accuracy of the two-behavior tag lookup on ``eval``."""
    _check_task(train, eval, POSL)
    table = build_posl_table(train)
    form = _form_of(eval)
    predictions = [table.predict((form(ref),)) for ref, _ in eval.instances]
    return accuracy(predictions, [label for _, label in eval.instances])


def lookup_dal(train: TaskDataset, eval: TaskDataset) -> float:
    """Accuracy of the four-behavior arc-label lookup on ``eval``."""
    _check_task(train, eval, DAL)
    table = build_dal_table(train)
    form = _form_of(eval)
    predictions = []
    for (head_ref, tail_ref), _ in eval.instances:
        head_form = form(head_ref)
        tail_form = form(tail_ref)
        predictions.append(
            table.predict(((head_form, tail_form), tail_form, head_form))
        )
    return accuracy(predictions, [label for _, label in eval.instances])
