"""Minimal CoNLL-U reading for exporters: sentence boundaries and forms only.

The skipping rules match standard UD consumption of syntactic words: comment
lines, multiword ranges (``3-4``) and empty nodes (``5.1``) are not tokens.
Anything else must be a ten-column line with a contiguous integer ID, so an
exported file aligns token-for-token with any reader that follows the same
conventions.
"""

from __future__ import annotations


class ConlluError(ValueError):
    """Malformed CoNLL-U input, with a 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def parse_sentences(text: str) -> list[list[str]]:
    """Return the surface forms of each sentence, in file order."""
    sentences: list[list[str]] = []
    pending: list[str] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if pending:
                sentences.append(pending)
                pending = []
            continue
        if line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConlluError(
                line_number,
                f"expected 10 tab-separated columns, got {len(columns)}")
        token_id = columns[0]
        if "-" in token_id or "." in token_id:
            continue  # multiword range / empty node: not syntactic words
        if not token_id.isdigit():
            raise ConlluError(line_number, f"invalid token ID {token_id!r}")
        if int(token_id) != len(pending) + 1:
            raise ConlluError(
                line_number,
                f"token IDs must be contiguous from 1, got {token_id}")
        if not columns[1]:
            raise ConlluError(line_number, "empty FORM column")
        pending.append(columns[1])
    if pending:
        sentences.append(pending)
    return sentences


def read_sentences(path: str) -> list[list[str]]:
    with open(path, encoding="utf-8") as handle:
        return parse_sentences(handle.read())
