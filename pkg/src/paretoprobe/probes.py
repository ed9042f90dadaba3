"""Probe families: linear (optionally rank-factorized), MLP, and biaffine.

All probes are plain numpy with hand-written backward passes. Every dense
layer carries its bias as a final weight column applied to an input padded
with a constant 1, so "the weight matrix" always includes the bias.

Classification probes map a feature vector to a distribution over labels;
the biaffine probe maps a sentence's token vectors to one distribution over
head candidates (root plus every other token) per token.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

PROBE_MAGIC = b"PPROBE1\x00"

LINEAR = "linear"
MLP = "mlp"
BIAFFINE = "biaffine"


def pad_ones(x: np.ndarray) -> np.ndarray:
    """Append the constant bias coordinate to each row (or to a vector)."""
    if x.ndim == 1:
        return np.concatenate([x, np.ones(1)])
    return np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    weights = np.exp(shifted)
    return weights / np.sum(weights, axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def _init(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) / np.sqrt(max(1, cols))


def _relu_stack_forward(layers, out, dropout, x, training, rng):
    """Forward through hidden ReLU layers and a final linear projection.

    Returns the projection output and the caches backward needs. Dropout
    (inverted, on hidden activations only) fires only in training mode.
    """
    caches = []
    activation = x
    for weight in layers:
        padded = pad_ones(activation)
        pre = padded @ weight.T
        post = np.maximum(pre, 0.0)
        mask = None
        if training and dropout > 0.0:
            if rng is None:
                raise ValueError("training-mode dropout needs an rng")
            mask = (rng.random(post.shape) >= dropout) / (1.0 - dropout)
            post = post * mask
        caches.append((padded, pre, mask))
        activation = post
    padded_last = pad_ones(activation)
    return padded_last @ out.T, (caches, padded_last)


def _relu_stack_backward(layers, out, g_output, cache):
    """Backward mate of :func:`_relu_stack_forward`.

    ``g_output`` is the loss gradient at the projection output. Returns
    per-layer weight gradients, the projection gradient, and the gradient
    with respect to the stack input.
    """
    caches, padded_last = cache
    g_out_weight = g_output.T @ padded_last
    g = (g_output @ out)[:, :-1]
    g_layers = [np.empty(0)] * len(layers)
    for index in reversed(range(len(layers))):
        padded, pre, mask = caches[index]
        if mask is not None:
            g = g * mask
        g = g * (pre > 0.0)
        g_layers[index] = g.T @ padded
        g = (g @ layers[index])[:, :-1]
    return g_layers, g_out_weight, g


@dataclass
class LinearProbe:
    """Softmax regression, optionally parameterized as a rank-r product.

    Unfactorized: ``weight`` is (labels, dim+1). Factorized: ``left`` is
    (r, labels), ``right`` is (r, dim+1), and the effective weight
    ``left.T @ right`` has rank at most r.
    """

    n_labels: int
    in_dim: int
    weight: np.ndarray | None = None
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    kind = LINEAR

    @classmethod
    def create(cls, n_labels: int, in_dim: int, rng: np.random.Generator,
               rank: int | None = None) -> "LinearProbe":
        """Fresh probe with zero label rows (uniform initial predictions).

        The zero start makes training exactly equivariant under label
        renaming; the factorized variant breaks the zero-product deadlock by
        drawing ``right`` randomly while ``left`` starts at zero.
        """
        if rank is None:
            return cls(n_labels, in_dim, weight=np.zeros((n_labels, in_dim + 1)))
        if not 1 <= rank:
            raise ValueError(f"rank must be positive, got {rank}")
        return cls(
            n_labels,
            in_dim,
            left=np.zeros((rank, n_labels)),
            right=_init(rng, rank, in_dim + 1),
        )

    @property
    def factorized(self) -> bool:
        return self.weight is None

    @property
    def rank_cap(self) -> int | None:
        return None if self.left is None else self.left.shape[0]

    def effective_weight(self) -> np.ndarray:
        if self.weight is not None:
            return self.weight
        return self.left.T @ self.right

    def parameters(self) -> list[np.ndarray]:
        if self.weight is not None:
            return [self.weight]
        return [self.left, self.right]

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise ValueError(
                f"expected inputs of dimension {self.in_dim}, got {x.shape[1]}"
            )
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Label distribution(s) for one vector or a batch of rows."""
        squeeze = np.asarray(x).ndim == 1
        probs = softmax(pad_ones(self._check(x)) @ self.effective_weight().T)
        return probs[0] if squeeze else probs

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(pad_ones(self._check(x)) @ self.effective_weight().T, axis=1)

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        """Summed cross-entropy with gradients for parameters and inputs."""
        x = self._check(x)
        padded = pad_ones(x)
        weight = self.effective_weight()
        logits = padded @ weight.T
        logp = log_softmax(logits)
        rows = np.arange(len(y))
        loss = float(-logp[rows, y].sum())
        g_logits = softmax(logits)
        g_logits[rows, y] -= 1.0
        g_weight = g_logits.T @ padded
        g_inputs = (g_logits @ weight)[:, :-1]
        if self.weight is not None:
            return loss, [g_weight], g_inputs
        return loss, [self.right @ g_weight.T, self.left @ g_weight], g_inputs


@dataclass
class MlpProbe:
    """ReLU MLP classifier; zero hidden layers degenerates to a linear probe."""

    n_labels: int
    in_dim: int
    layers: list[np.ndarray] = field(default_factory=list)
    out: np.ndarray | None = None
    dropout: float = 0.0

    kind = MLP

    @classmethod
    def create(cls, n_labels: int, in_dim: int, hidden_layers: int,
               hidden_size: int, dropout: float, rng: np.random.Generator) -> "MlpProbe":
        """Random hidden layers, zero output layer (see LinearProbe.create)."""
        if not 0.0 <= dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {dropout}")
        layers = []
        fan_in = in_dim
        for _ in range(hidden_layers):
            layers.append(_init(rng, hidden_size, fan_in + 1))
            fan_in = hidden_size
        out = np.zeros((n_labels, fan_in + 1))
        return cls(n_labels, in_dim, layers=layers, out=out, dropout=dropout)

    @property
    def hidden_layers(self) -> int:
        return len(self.layers)

    @property
    def hidden_size(self) -> int:
        return self.layers[0].shape[0] if self.layers else 0

    def parameters(self) -> list[np.ndarray]:
        return [*self.layers, self.out]

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise ValueError(
                f"expected inputs of dimension {self.in_dim}, got {x.shape[1]}"
            )
        return x

    def forward(self, x: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        squeeze = np.asarray(x).ndim == 1
        logits, _ = _relu_stack_forward(
            self.layers, self.out, self.dropout, self._check(x), training, rng
        )
        probs = softmax(logits)
        return probs[0] if squeeze else probs

    def predict(self, x: np.ndarray) -> np.ndarray:
        logits, _ = _relu_stack_forward(
            self.layers, self.out, self.dropout, self._check(x), False, None
        )
        return np.argmax(logits, axis=1)

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray,
                       training: bool = True,
                       rng: np.random.Generator | None = None):
        x = self._check(x)
        logits, cache = _relu_stack_forward(
            self.layers, self.out, self.dropout, x, training, rng
        )
        logp = log_softmax(logits)
        rows = np.arange(len(y))
        loss = float(-logp[rows, y].sum())
        g_logits = softmax(logits)
        g_logits[rows, y] -= 1.0
        g_layers, g_out, g_inputs = _relu_stack_backward(
            self.layers, self.out, g_logits, cache
        )
        return loss, [*g_layers, g_out], g_inputs


@dataclass
class MlpEncoder:
    """ReLU MLP ending in a linear projection; the biaffine probe uses two."""

    in_dim: int
    enc_dim: int
    layers: list[np.ndarray]
    out: np.ndarray
    dropout: float = 0.0

    @classmethod
    def create(cls, in_dim: int, enc_dim: int, hidden_layers: int,
               hidden_size: int, dropout: float, rng: np.random.Generator) -> "MlpEncoder":
        layers = []
        fan_in = in_dim
        for _ in range(hidden_layers):
            layers.append(_init(rng, hidden_size, fan_in + 1))
            fan_in = hidden_size
        return cls(in_dim, enc_dim, layers, _init(rng, enc_dim, fan_in + 1), dropout)

    def parameters(self) -> list[np.ndarray]:
        return [*self.layers, self.out]


@dataclass
class BiaffineProbe:
    """Head selection: score(head i, tail j) = enc_head(h_i) @ W @ enc_tail(h_j).

    Candidates for each token are the artificial root (a learnable vector in
    representation space, position 0) and every token except the token
    itself, whose logit is masked to -inf. Decoding is greedy argmax per
    token; no tree constraint is enforced.
    """

    in_dim: int
    head_encoder: MlpEncoder
    tail_encoder: MlpEncoder
    bilinear: np.ndarray
    root: np.ndarray
    dropout: float = 0.0

    kind = BIAFFINE

    @classmethod
    def create(cls, in_dim: int, hidden_layers: int, hidden_size: int,
               dropout: float, rng: np.random.Generator) -> "BiaffineProbe":
        if not 0.0 <= dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {dropout}")
        head_encoder = MlpEncoder.create(
            in_dim, hidden_size, hidden_layers, hidden_size, dropout, rng
        )
        tail_encoder = MlpEncoder.create(
            in_dim, hidden_size, hidden_layers, hidden_size, dropout, rng
        )
        bilinear = _init(rng, hidden_size, hidden_size)
        root = rng.standard_normal(in_dim)
        return cls(in_dim, head_encoder, tail_encoder, bilinear, root, dropout)

    @property
    def enc_dim(self) -> int:
        return self.bilinear.shape[0]

    @property
    def hidden_layers(self) -> int:
        return len(self.head_encoder.layers)

    def parameters(self) -> list[np.ndarray]:
        return [
            *self.head_encoder.parameters(),
            *self.tail_encoder.parameters(),
            self.bilinear,
            self.root,
        ]

    def _scores(self, inputs: np.ndarray, training: bool,
                rng: np.random.Generator | None):
        inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        if inputs.shape[1] != self.in_dim:
            raise ValueError(
                f"expected inputs of dimension {self.in_dim}, got {inputs.shape[1]}"
            )
        head_inputs = np.vstack([self.root, inputs])
        enc_head, cache_head = _relu_stack_forward(
            self.head_encoder.layers, self.head_encoder.out, self.dropout,
            head_inputs, training, rng,
        )
        enc_tail, cache_tail = _relu_stack_forward(
            self.tail_encoder.layers, self.tail_encoder.out, self.dropout,
            inputs, training, rng,
        )
        scores = enc_head @ self.bilinear @ enc_tail.T  # (n+1, n)
        np.fill_diagonal(scores[1:], -np.inf)  # a token may not head itself
        return scores, (enc_head, enc_tail, cache_head, cache_tail)

    def forward(self, inputs: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        """(n, n+1) matrix: row j is token j+1's distribution over heads 0..n."""
        scores, _ = self._scores(inputs, training, rng)
        return softmax(scores, axis=0).T

    def predict_heads(self, inputs: np.ndarray) -> np.ndarray:
        scores, _ = self._scores(inputs, False, None)
        return np.argmax(scores, axis=0)

    def loss_and_grads(self, inputs: np.ndarray, heads: np.ndarray,
                       training: bool = True,
                       rng: np.random.Generator | None = None):
        """Summed cross-entropy over the sentence's tokens.

        Tokens whose gold head is structurally impossible (the token itself,
        which only shuffled targets can produce) contribute no loss and no
        gradient; accuracy scoring still counts them as errors.
        """
        heads = np.asarray(heads, dtype=np.int64)
        scores, (enc_head, enc_tail, cache_head, cache_tail) = self._scores(
            inputs, training, rng
        )
        n = scores.shape[1]
        columns = np.arange(n)
        possible = heads != columns + 1
        logp = log_softmax(scores, axis=0)
        loss = float(-logp[heads[possible], columns[possible]].sum())
        g_scores = softmax(scores, axis=0)
        g_scores[heads[possible], columns[possible]] -= 1.0
        g_scores[:, ~possible] = 0.0
        g_bilinear = enc_head.T @ g_scores @ enc_tail
        g_enc_head = g_scores @ enc_tail @ self.bilinear.T
        g_enc_tail = g_scores.T @ enc_head @ self.bilinear
        g_head_layers, g_head_out, g_head_inputs = _relu_stack_backward(
            self.head_encoder.layers, self.head_encoder.out, g_enc_head, cache_head
        )
        g_tail_layers, g_tail_out, g_tail_inputs = _relu_stack_backward(
            self.tail_encoder.layers, self.tail_encoder.out, g_enc_tail, cache_tail
        )
        g_root = g_head_inputs[0]
        g_inputs = g_head_inputs[1:] + g_tail_inputs
        grads = [
            *g_head_layers, g_head_out,
            *g_tail_layers, g_tail_out,
            g_bilinear,
            g_root,
        ]
        return loss, grads, g_inputs


Probe = LinearProbe | MlpProbe | BiaffineProbe


def _descriptor(probe: Probe) -> dict:
    if isinstance(probe, LinearProbe):
        return {
            "kind": LINEAR,
            "n_labels": probe.n_labels,
            "in_dim": probe.in_dim,
            "rank": probe.rank_cap,
        }
    if isinstance(probe, MlpProbe):
        return {
            "kind": MLP,
            "n_labels": probe.n_labels,
            "in_dim": probe.in_dim,
            "hidden_layers": probe.hidden_layers,
            "hidden_size": probe.hidden_size,
            "dropout": probe.dropout,
        }
    if isinstance(probe, BiaffineProbe):
        return {
            "kind": BIAFFINE,
            "in_dim": probe.in_dim,
            "enc_dim": probe.enc_dim,
            "hidden_layers": probe.hidden_layers,
            "hidden_size": probe.head_encoder.layers[0].shape[0]
            if probe.head_encoder.layers else probe.enc_dim,
            "dropout": probe.dropout,
        }
    raise TypeError(f"cannot serialize {type(probe).__name__}")


def save_probe(path: str, probe: Probe) -> None:
    """Write magic, a length-prefixed JSON descriptor, then float32 tensors
    in ``parameters()`` order (little-endian)."""
    tensors = probe.parameters()
    descriptor = _descriptor(probe)
    descriptor["format_version"] = 1
    descriptor["shapes"] = [list(t.shape) for t in tensors]
    blob = json.dumps(descriptor, sort_keys=True).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(PROBE_MAGIC)
        handle.write(struct.pack("<I", len(blob)))
        handle.write(blob)
        for tensor in tensors:
            handle.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_probe(path: str) -> Probe:
    """Inverse of :func:`save_probe`; weights come back as float64 copies of
    the stored float32 values."""
    with open(path, "rb") as handle:
        data = handle.read()
    if data[:8] != PROBE_MAGIC:
        raise ValueError(f"{path}: not a probe file")
    (length,) = struct.unpack_from("<I", data, 8)
    descriptor = json.loads(data[12:12 + length].decode("utf-8"))
    offset = 12 + length
    tensors = []
    for shape in descriptor["shapes"]:
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        tensors.append(values.astype(np.float64).reshape(shape))
        offset += 4 * count
    kind = descriptor["kind"]
    if kind == LINEAR:
        if descriptor["rank"] is None:
            return LinearProbe(descriptor["n_labels"], descriptor["in_dim"],
                               weight=tensors[0])
        return LinearProbe(descriptor["n_labels"], descriptor["in_dim"],
                           left=tensors[0], right=tensors[1])
    if kind == MLP:
        return MlpProbe(descriptor["n_labels"], descriptor["in_dim"],
                        layers=tensors[:-1], out=tensors[-1],
                        dropout=descriptor["dropout"])
    if kind == BIAFFINE:
        depth = descriptor["hidden_layers"]
        head = MlpEncoder(descriptor["in_dim"], descriptor["enc_dim"],
                          tensors[:depth], tensors[depth],
                          descriptor["dropout"])
        rest = tensors[depth + 1:]
        tail = MlpEncoder(descriptor["in_dim"], descriptor["enc_dim"],
                          rest[:depth], rest[depth], descriptor["dropout"])
        return BiaffineProbe(descriptor["in_dim"], head, tail,
                             bilinear=rest[depth + 1], root=rest[depth + 2],
                             dropout=descriptor["dropout"])
    raise ValueError(f"{path}: unknown probe kind {kind!r}")
