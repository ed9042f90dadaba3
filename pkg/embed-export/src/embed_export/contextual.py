"""Per-token vectors from a pretrained encoder, aligned to CoNLL-U tokens.

For each sentence the encoder runs on the pre-tokenized words, the selected
hidden layer is grouped by source word, and each word's piece vectors are
averaged into one row. Inference runs in eval mode with gradients disabled,
so a rerun writes a byte-identical file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from embed_export import conllu, formats


class AlignmentError(ValueError):
    """A treebank token could not be mapped to any encoder word piece."""


@dataclass(frozen=True)
class ExportJob:
    """One contextual export: encoder, treebank, destination.

    ``layer`` indexes the encoder's hidden states (-1 = final layer, the
    default and the only layer this pipeline analyzes downstream).
    """

    model: str
    treebank: str
    out: str
    layer: int = -1
    batch_size: int = 16


def export_contextual(job: ExportJob) -> list[np.ndarray]:
    """Write a contextual embedding file; return the per-sentence matrices."""
    # torch and transformers are imported here so that static-only use of the
    # package never pays their startup cost
    import torch
    from transformers import AutoModel, AutoTokenizer
    from transformers.utils import logging as hf_logging

    hf_logging.disable_progress_bar()  # keep stderr for real errors
    sentences = conllu.read_sentences(job.treebank)
    if not sentences:
        raise ValueError(f"{job.treebank}: no sentences to export")
    tokenizer = AutoTokenizer.from_pretrained(job.model)
    if not tokenizer.is_fast:
        raise ValueError(
            f"{job.model}: word alignment requires a fast tokenizer")
    model = AutoModel.from_pretrained(job.model)
    model.eval()

    matrices: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(sentences), job.batch_size):
            batch = sentences[start:start + job.batch_size]
            encoding = tokenizer(batch, is_split_into_words=True,
                                 padding=True, return_tensors="pt")
            hidden = model(**encoding, output_hidden_states=True).hidden_states
            if not -len(hidden) <= job.layer < len(hidden):
                raise ValueError(
                    f"layer {job.layer} out of range: model has "
                    f"{len(hidden)} hidden states")
            vectors = hidden[job.layer]
            for offset, words in enumerate(batch):
                matrices.append(_mean_by_word(
                    vectors[offset], encoding.word_ids(offset),
                    words, start + offset))
    formats.write_contextual(job.out, matrices)
    return matrices


def _mean_by_word(vectors, word_ids, words: list[str],
                  sent_index: int) -> np.ndarray:
    """Average the piece vectors of each source word into one float32 row."""
    groups: list[list[int]] = [[] for _ in words]
    for position, word_id in enumerate(word_ids):
        if word_id is not None:  # None marks specials and padding
            groups[word_id].append(position)
    rows = np.empty((len(words), vectors.shape[-1]), dtype=np.float32)
    for word_id, positions in enumerate(groups):
        if not positions:
            raise AlignmentError(
                f"sentence {sent_index}: token {word_id + 1} "
                f"{words[word_id]!r} produced no word pieces")
        rows[word_id] = vectors[positions].mean(dim=0).float().cpu().numpy()
    return rows
