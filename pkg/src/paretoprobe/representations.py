"""Word representation providers and the binary embedding file formats.

Four provider kinds feed the probes:

* ``onehot-learned``   trainable type-level table, standard-normal init
* ``random-frozen``    frozen type-level vectors from a keyed hash
* ``static-file``      frozen type-level vectors loaded from a ``PPEMB1`` file
* ``contextual-file``  frozen per-token vectors loaded from a ``PPCTX1`` file

All out-of-vocabulary vectors are deterministic functions of (word, seed) and
are never trainable.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .corpus import Sentence, Treebank

ONEHOT_LEARNED = "onehot-learned"
RANDOM_FROZEN = "random-frozen"
STATIC_FILE = "static-file"
CONTEXTUAL_FILE = "contextual-file"
PROVIDER_KINDS = (ONEHOT_LEARNED, RANDOM_FROZEN, STATIC_FILE, CONTEXTUAL_FILE)

STATIC_MAGIC = b"PPEMB1\x00"
CONTEXTUAL_MAGIC = b"PPCTX1\x00"

DEFAULT_DIM = 768


class EmbeddingFormatError(ValueError):
    """Malformed embedding file; carries the byte offset of the problem."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


class AlignmentError(ValueError):
    """A contextual store does not line up with the treebank it claims to cover."""


def _keyed_rng(key: str, seed: int) -> np.random.Generator:
    digest = hashlib.blake2b(
        key.encode("utf-8"),
        digest_size=16,
        key=int(seed).to_bytes(8, "little", signed=True),
    ).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))


def keyed_normal_vector(word: str, seed: int, dim: int) -> np.ndarray:
    """Standard-normal vector drawn from a stream keyed by (word, seed).

    The same (word, seed, dim) always yields the same vector, across processes
    and platforms; different words or seeds yield independent-looking streams.
    """
    return _keyed_rng(word, seed).standard_normal(dim)


@dataclass(frozen=True)
class Vocabulary:
    """Word types of a train split, in first-occurrence order."""

    words: tuple[str, ...]
    index: dict[str, int] = field(repr=False)

    @classmethod
    def from_treebank(cls, treebank: Treebank) -> "Vocabulary":
        index: dict[str, int] = {}
        for _, _, token in treebank.tokens():
            if token.form not in index:
                index[token.form] = len(index)
        return cls(words=tuple(index), index=index)

    @classmethod
    def from_words(cls, words) -> "Vocabulary":
        index: dict[str, int] = {}
        for word in words:
            if word not in index:
                index[word] = len(index)
        return cls(words=tuple(index), index=index)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


class RepresentationProvider:
    """Base interface: map a sentence to a (len, dim) float64 matrix."""

    kind: str
    dim: int
    trainable: bool
    seed: int
    name: str

    def embed_sentence(self, sentence: Sentence) -> np.ndarray:
        raise NotImplementedError

    def embed_token(self, sentence: Sentence, position: int) -> np.ndarray:
        return self.embed_sentence(sentence)[position]


class _TypeLevelProvider(RepresentationProvider):
    """Shared machinery for providers where vectors depend on the form only."""

    trainable = False

    def vector(self, word: str) -> np.ndarray:
        raise NotImplementedError

    def embed_sentence(self, sentence: Sentence) -> np.ndarray:
        return np.stack([self.vector(token.form) for token in sentence.tokens])


class RandomFrozenProvider(_TypeLevelProvider):
    """Frozen standard-normal vector per word type, keyed-hash deterministic.

    In-vocabulary and out-of-vocabulary words are treated identically, so no
    vocabulary is needed; it may be supplied for bookkeeping.
    """

    kind = RANDOM_FROZEN

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0,
                 vocab: Vocabulary | None = None, name: str = RANDOM_FROZEN):
        self.dim = dim
        self.seed = seed
        self.vocab = vocab
        self.name = name

    def vector(self, word: str) -> np.ndarray:
        return keyed_normal_vector(word, self.seed, self.dim)


class OnehotLearnedProvider(_TypeLevelProvider):
    """Trainable type-level table over the train vocabulary.

    ``initial_table`` holds the standard-normal starting point, one row per
    vocabulary word; training operates on a fresh copy per job (see
    ``training`` module). Out-of-vocabulary words fall back to frozen
    keyed-hash vectors and never receive gradient.
    """

    kind = ONEHOT_LEARNED
    trainable = True

    def __init__(self, vocab: Vocabulary, dim: int = DEFAULT_DIM, seed: int = 0,
                 name: str = ONEHOT_LEARNED):
        self.vocab = vocab
        self.dim = dim
        self.seed = seed
        self.name = name

    def initial_table(self) -> np.ndarray:
        return np.stack(
            [keyed_normal_vector(word, self.seed, self.dim) for word in self.vocab.words]
        ) if len(self.vocab) else np.zeros((0, self.dim))

    def vector(self, word: str) -> np.ndarray:
        # untrained view; training-time lookups go through the table copy
        return keyed_normal_vector(word, self.seed, self.dim)


class StaticFileProvider(_TypeLevelProvider):
    """Frozen type-level vectors from a file; OOV backs off to keyed hash."""

    kind = STATIC_FILE

    def __init__(self, words: tuple[str, ...], matrix: np.ndarray, seed: int = 0,
                 name: str = STATIC_FILE):
        self.words = words
        self.matrix = matrix  # (V, dim) float32, kept exactly as stored
        self.index = {word: i for i, word in enumerate(words)}
        self.dim = int(matrix.shape[1])
        self.seed = seed
        self.name = name

    def vector(self, word: str) -> np.ndarray:
        row = self.index.get(word)
        if row is None:
            return keyed_normal_vector(word, self.seed, self.dim)
        return self.matrix[row].astype(np.float64)


class ContextualProvider(RepresentationProvider):
    """Frozen per-token vectors, one matrix per sentence index."""

    kind = CONTEXTUAL_FILE
    trainable = False

    def __init__(self, store: dict[int, np.ndarray], dim: int, seed: int = 0,
                 name: str = CONTEXTUAL_FILE):
        self.store = store  # sent_index -> (len, dim) float32
        self.dim = dim
        self.seed = seed
        self.name = name

    def embed_sentence(self, sentence: Sentence) -> np.ndarray:
        matrix = self.store.get(sentence.sent_index)
        if matrix is None:
            raise AlignmentError(
                f"contextual store has no entry for sentence {sentence.sent_index}"
            )
        if matrix.shape[0] != len(sentence):
            raise AlignmentError(
                f"sentence {sentence.sent_index}: store has {matrix.shape[0]} "
                f"vectors for {len(sentence)} tokens"
            )
        return matrix.astype(np.float64)


def hashed_contextual_provider(
    treebank: Treebank, dim: int, seed: int = 0, name: str = "hashed-contextual"
) -> ContextualProvider:
    """Deterministic context-sensitive store built from keyed hashes.

    Each token vector depends on the whole sentence's forms and the token
    position, so identical forms in different contexts get different vectors.
    A stand-in for encoder output in fixtures and demos.
    """
    store: dict[int, np.ndarray] = {}
    for sentence in treebank.sentences:
        context = "\x1f".join(sentence.forms)
        rows = [
            keyed_normal_vector(f"{context}\x1e{position}", seed, dim)
            for position in range(len(sentence))
        ]
        store[sentence.sent_index] = np.stack(rows).astype(np.float32)
    return ContextualProvider(store=store, dim=dim, seed=seed, name=name)


def build_provider(
    kind: str,
    vocab: Vocabulary | None = None,
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    path: str | None = None,
    name: str | None = None,
) -> RepresentationProvider:
    """Construct a provider; file-backed kinds load and validate ``path``."""
    label = name or kind
    if kind == RANDOM_FROZEN:
        return RandomFrozenProvider(dim=dim, seed=seed, vocab=vocab, name=label)
    if kind == ONEHOT_LEARNED:
        if vocab is None:
            raise ValueError("onehot-learned requires a vocabulary")
        return OnehotLearnedProvider(vocab=vocab, dim=dim, seed=seed, name=label)
    if kind in (STATIC_FILE, CONTEXTUAL_FILE):
        if path is None:
            raise ValueError(f"{kind} requires a file path")
        provider = load_embedding_file(path, seed=seed, name=label)
        if provider.kind != kind:
            raise EmbeddingFormatError(
                0, f"{path} holds a {provider.kind} payload, config says {kind}"
            )
        return provider
    raise ValueError(f"unknown representation kind {kind!r}")


class _Reader:
    """Byte cursor that reports offsets in its errors."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, count: int, what: str) -> bytes:
        if self.offset + count > len(self.data):
            raise EmbeddingFormatError(self.offset, f"truncated while reading {what}")
        chunk = self.data[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def floats(self, count: int, what: str) -> np.ndarray:
        start = self.offset
        raw = self.take(4 * count, what)
        values = np.frombuffer(raw, dtype="<f4")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise EmbeddingFormatError(
                start + 4 * bad, f"non-finite float in {what}"
            )
        return values

    def done(self) -> bool:
        return self.offset == len(self.data)


def write_static_file(path: str, words, matrix: np.ndarray) -> None:
    """Write a type-level embedding file: magic, u32 V, u32 dim, then per word
    a u16 byte length, UTF-8 form, and dim little-endian float32 values."""
    words = list(words)
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.shape != (len(words), matrix.shape[1]):
        raise ValueError("matrix rows must match word count")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("refusing to write non-finite vectors")
    with open(path, "wb") as handle:
        handle.write(STATIC_MAGIC)
        handle.write(struct.pack("<II", len(words), matrix.shape[1]))
        for word, row in zip(words, matrix):
            encoded = word.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"word too long to encode: {word[:32]}…")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(row.tobytes())


def write_contextual_file(path: str, store: dict[int, np.ndarray], dim: int) -> None:
    """Write a per-token embedding file: magic, u32 dim, u32 sentence count,
    then per sentence a u32 sentence index, u32 length, and length*dim floats."""
    with open(path, "wb") as handle:
        handle.write(CONTEXTUAL_MAGIC)
        handle.write(struct.pack("<II", dim, len(store)))
        for sent_index in sorted(store):
            matrix = np.ascontiguousarray(store[sent_index], dtype="<f4")
            if matrix.ndim != 2 or matrix.shape[1] != dim:
                raise ValueError(f"sentence {sent_index}: expected (len, {dim}) matrix")
            if not np.all(np.isfinite(matrix)):
                raise ValueError(f"sentence {sent_index}: non-finite vectors")
            handle.write(struct.pack("<II", sent_index, matrix.shape[0]))
            handle.write(matrix.tobytes())


def load_embedding_file(path: str, seed: int = 0, name: str | None = None) -> RepresentationProvider:
    """Load a ``PPEMB1`` or ``PPCTX1`` file, dispatching on the magic bytes.

    Malformed input raises :class:`EmbeddingFormatError` naming the byte
    offset; all stored float32 values are returned exactly as written.
    """
    with open(path, "rb") as handle:
        reader = _Reader(handle.read())
    magic = reader.take(7, "magic")
    if magic == STATIC_MAGIC:
        count = reader.u32("word count")
        dim = reader.u32("dimension")
        if dim == 0:
            raise EmbeddingFormatError(7 + 4, "dimension must be positive")
        words = []
        rows = []
        for i in range(count):
            length = reader.u16(f"word {i} length")
            raw = reader.take(length, f"word {i} bytes")
            try:
                words.append(raw.decode("utf-8"))
            except UnicodeDecodeError:
                raise EmbeddingFormatError(
                    reader.offset - length, f"word {i} is not valid UTF-8"
                ) from None
            rows.append(reader.floats(dim, f"vector for word {i}"))
        if not reader.done():
            raise EmbeddingFormatError(reader.offset, "trailing bytes after last record")
        matrix = np.stack(rows) if rows else np.zeros((0, dim), dtype="<f4")
        return StaticFileProvider(tuple(words), matrix, seed=seed,
                                  name=name or STATIC_FILE)
    if magic == CONTEXTUAL_MAGIC:
        dim = reader.u32("dimension")
        if dim == 0:
            raise EmbeddingFormatError(7, "dimension must be positive")
        count = reader.u32("sentence count")
        store: dict[int, np.ndarray] = {}
        for i in range(count):
            sent_index = reader.u32(f"sentence record {i} index")
            if sent_index in store:
                raise EmbeddingFormatError(
                    reader.offset - 4, f"duplicate sentence index {sent_index}"
                )
            length = reader.u32(f"sentence {sent_index} length")
            values = reader.floats(length * dim, f"sentence {sent_index} vectors")
            store[sent_index] = values.reshape(length, dim)
        if not reader.done():
            raise EmbeddingFormatError(reader.offset, "trailing bytes after last record")
        return ContextualProvider(store, dim=dim, seed=seed,
                                  name=name or CONTEXTUAL_FILE)
    raise EmbeddingFormatError(0, f"unrecognized magic {magic!r}")
