"""Read text word-vector files and export treebank-vocabulary subsets."""

from __future__ import annotations

import logging

import numpy as np

from embed_export import conllu, formats

logger = logging.getLogger(__name__)


def read_vec(path: str) -> dict[str, np.ndarray]:
    """Parse a ``.vec`` text file: one ``word v1 … vd`` line per word.

    A leading ``V d`` count header (as written by fastText) is accepted and
    ignored. The first vector fixes the dimension; later lines that disagree
    are an error. Duplicate words keep their first vector.
    """
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            fields = line.rstrip("\n").split(" ")
            if line_number == 1 and len(fields) == 2 and \
                    all(f.isdigit() for f in fields):
                continue  # count header
            if len(fields) < 2:
                raise ValueError(f"{path}:{line_number}: not a vector line")
            word, values = fields[0], fields[1:]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{line_number}: expected {dim} values, "
                    f"got {len(values)}")
            try:
                vector = np.array(values, dtype=np.float32)
            except ValueError:
                raise ValueError(
                    f"{path}:{line_number}: non-numeric vector value") from None
            table.setdefault(word, vector)
    if not table:
        raise ValueError(f"{path}: no vectors found")
    return table


def export_static(vectors_path: str, treebank_path: str,
                  out_path: str) -> tuple[list[str], np.ndarray]:
    """Write the treebank vocabulary's vectors; return (words, matrix).

    The vocabulary is every distinct form in the treebank, in first-occurrence
    order. Text sources carry no subword model, so words absent from the
    source are omitted from the file and logged.
    """
    source = read_vec(vectors_path)
    vocabulary = list(dict.fromkeys(
        form for sentence in conllu.read_sentences(treebank_path)
        for form in sentence))
    words = [word for word in vocabulary if word in source]
    missing = [word for word in vocabulary if word not in source]
    if missing:
        shown = ", ".join(repr(word) for word in missing[:10])
        if len(missing) > 10:
            shown += ", …"
        logger.warning("%d of %d vocabulary words absent from %s, omitted: %s",
                       len(missing), len(vocabulary), vectors_path, shown)
    if not words:
        raise ValueError(
            f"{vectors_path} covers none of the {len(vocabulary)} "
            "vocabulary words")
    matrix = np.stack([source[word] for word in words])
    formats.write_static(out_path, words, matrix)
    return words, matrix
