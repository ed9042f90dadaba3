"""Writers for the two binary embedding formats consumed downstream.

Static (``PPEMB1\\0``): u32 word count, u32 dim, then per word a u16 UTF-8
byte length, the encoded word, and dim float32 values. Contextual
(``PPCTX1\\0``): u32 dim, u32 sentence count, then per sentence a u32
sentence index (file order from 0), a u32 length, and length*dim float32
values. All integers and floats are little-endian; every float must be
finite. Writes are atomic: the payload goes to a temp file in the target
directory, then ``os.replace``.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

STATIC_MAGIC = b"PPEMB1\x00"
CONTEXTUAL_MAGIC = b"PPCTX1\x00"


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    descriptor, temp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(descriptor, "wb") as handle:
            handle.write(payload)
        os.replace(temp_path, path)
    except BaseException:
        os.unlink(temp_path)
        raise


def _as_rows(matrix: np.ndarray, what: str) -> np.ndarray:
    rows = np.ascontiguousarray(matrix, dtype="<f4")
    if rows.ndim != 2:
        raise ValueError(f"{what}: expected a 2-D matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(rows)):
        raise ValueError(f"{what}: refusing to write non-finite values")
    return rows


def write_static(path: str, words: list[str], matrix: np.ndarray) -> None:
    """Write one vector per word; row order follows ``words``."""
    rows = _as_rows(matrix, "static vectors")
    if rows.shape[0] != len(words):
        raise ValueError(
            f"matrix has {rows.shape[0]} rows for {len(words)} words")
    parts = [STATIC_MAGIC, struct.pack("<II", len(words), rows.shape[1])]
    for word, row in zip(words, rows):
        encoded = word.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ValueError(f"word too long to encode: {word[:32]}…")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(row.tobytes())
    _atomic_write(path, b"".join(parts))


def write_contextual(path: str, matrices: list[np.ndarray]) -> None:
    """Write one (length, dim) matrix per sentence, indexed by file order."""
    if not matrices:
        raise ValueError("refusing to write an empty contextual file")
    dim = None
    parts = [b""]  # header written once dim is known
    for sent_index, matrix in enumerate(matrices):
        rows = _as_rows(matrix, f"sentence {sent_index}")
        if dim is None:
            dim = rows.shape[1]
        elif rows.shape[1] != dim:
            raise ValueError(
                f"sentence {sent_index}: dim {rows.shape[1]} != {dim}")
        parts.append(struct.pack("<II", sent_index, rows.shape[0]))
        parts.append(rows.tobytes())
    parts[0] = CONTEXTUAL_MAGIC + struct.pack("<II", dim, len(matrices))
    _atomic_write(path, b"".join(parts))
