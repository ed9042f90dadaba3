"""Probe optimization and hyperparameter sweeps.

Training is plain mini-batch Adam over the summed cross-entropy, plus the
nuclear-norm term for linear probes: the penalty gradient is the subgradient
U V^T from the thin SVD of the effective weight each step (a proximal
soft-threshold variant sits behind ``TrainConfig.proximal``). Early stopping
monitors dev accuracy in real mode and train accuracy in shuffled modes; the
parameters of the best monitored epoch are restored before scoring.

Layers whose rows correspond to labels start at zero, which makes training
exactly equivariant under label renaming (a permutation of label ids permutes
the trajectory and leaves every accuracy unchanged).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import DAL, PARSE, POSL, TaskDataset
from .probes import BiaffineProbe, LinearProbe, MlpProbe, Probe
from .representations import RepresentationProvider, keyed_normal_vector

LINEAR_NUCLEAR = "linear-nuclear"
LINEAR_RANK = "linear-rank"
MLP_FAMILY = "mlp"
FAMILIES = (LINEAR_NUCLEAR, LINEAR_RANK, MLP_FAMILY)

REAL = "real"
LABEL_SHUFFLED = "label-shuffled"
FULLY_SHUFFLED = "fully-shuffled"
MODES = (REAL, LABEL_SHUFFLED, FULLY_SHUFFLED)


class ConfigurationError(ValueError):
    """A spec/config combination the contracts rule out."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the step index and gradient norm."""

    def __init__(self, step: int, gradient_norm: float):
        super().__init__(
            f"non-finite loss at step {step} (gradient norm {gradient_norm:.3e})"
        )
        self.step = step
        self.gradient_norm = gradient_norm


@dataclass(frozen=True)
class ProbeSpec:
    """Architecture of one probe in a sweep.

    ``family`` selects the probe class; for the mlp family on the parse task
    the hyperparameters describe the two biaffine encoders.
    """

    task: str
    family: str
    probe_id: int = 0
    hidden_layers: int = 0
    hidden_size: int = 0
    dropout: float = 0.0
    rank: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown probe family {self.family!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64  # instances for classification, sentences for parsing
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    penalty: float = 0.0  # nuclear-norm weight, linear family only
    mode: str = REAL
    proximal: bool = False

    def __post_init__(self):
        if self.penalty < 0.0:
            raise ConfigurationError(f"penalty must be >= 0, got {self.penalty}")
        if self.patience < 1:
            raise ConfigurationError(f"patience must be >= 1, got {self.patience}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigurationError("batch_size and max_epochs must be >= 1")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown objective mode {self.mode!r}")


@dataclass(frozen=True)
class SweepSpec:
    family: str
    count: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown probe family {self.family!r}")
        if self.count < 1:
            raise ConfigurationError(f"count must be >= 1, got {self.count}")


@dataclass
class TrainedProbe:
    spec: ProbeSpec
    config: TrainConfig
    probe: Probe
    train_accuracy: float
    dev_accuracy: float | None
    test_accuracy: float | None
    nuclear_norm: float | None
    rank: int | None
    epochs_run: int
    wall_time: float
    history: list[dict] = field(default_factory=list)
    table: np.ndarray | None = None


def input_dim(task: str, dim: int) -> int:
    """Probe input width: DAL concatenates the head and tail vectors."""
    return 2 * dim if task == DAL else dim


def build_probe(spec: ProbeSpec, dim: int, n_labels: int,
                rng: np.random.Generator) -> Probe:
    """Instantiate the probe a spec describes, seeded by ``rng``."""
    width = input_dim(spec.task, dim)
    if spec.family in (LINEAR_NUCLEAR, LINEAR_RANK):
        if spec.task == PARSE:
            raise ConfigurationError(
                "parse probes are biaffine; the linear families apply to "
                "posl and dal only"
            )
        rank = spec.rank if spec.family == LINEAR_RANK else None
        return LinearProbe.create(n_labels, width, rng, rank=rank)
    if spec.task == PARSE:
        return BiaffineProbe.create(
            width, spec.hidden_layers, max(1, spec.hidden_size),
            spec.dropout, rng,
        )
    return MlpProbe.create(
        n_labels, width, spec.hidden_layers, spec.hidden_size, spec.dropout, rng
    )


class Adam:
    """Adaptive moment estimation; updates the given arrays in place."""

    def __init__(self, params: list[np.ndarray], learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.first = [np.zeros_like(p) for p in params]
        self.second = [np.zeros_like(p) for p in params]
        self.step_count = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.step_count += 1
        correct1 = 1.0 - self.beta1 ** self.step_count
        correct2 = 1.0 - self.beta2 ** self.step_count
        for param, grad, m, v in zip(self.params, grads, self.first, self.second):
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= self.learning_rate * (m / correct1) / (
                np.sqrt(v / correct2) + self.epsilon
            )


def _nuclear(weight: np.ndarray) -> tuple[float, int]:
    """(sum of singular values, numerical rank at 1e-8 relative tolerance)."""
    singulars = np.linalg.svd(weight, compute_uv=False)
    top = float(singulars[0]) if singulars.size else 0.0
    if top == 0.0:
        return 0.0, 0
    return float(singulars.sum()), int(np.sum(singulars > 1e-8 * top))


def regularized_loss(probe: Probe, batch, penalty: float = 0.0) -> float:
    """Summed cross-entropy of ``batch`` plus ``penalty`` times the nuclear
    norm of the linear probe's effective weight.

    ``batch`` is ``(inputs, targets)`` for classification probes and a list
    of ``(sentence_matrix, heads)`` pairs for the biaffine probe. A positive
    penalty with a non-linear probe is a configuration error.
    """
    if penalty < 0.0:
        raise ConfigurationError(f"penalty must be >= 0, got {penalty}")
    if penalty > 0.0 and not isinstance(probe, LinearProbe):
        raise ConfigurationError(
            "the nuclear-norm penalty is defined only for the linear family"
        )
    if isinstance(probe, BiaffineProbe):
        if not batch:
            raise ValueError("batch must be non-empty")
        loss = sum(
            probe.loss_and_grads(inputs, heads, training=False)[0]
            for inputs, heads in batch
        )
    else:
        inputs, targets = batch
        if len(targets) == 0:
            raise ValueError("batch must be non-empty")
        if isinstance(probe, LinearProbe):
            loss = probe.loss_and_grads(inputs, targets)[0]
        else:
            loss = probe.loss_and_grads(inputs, targets, training=False)[0]
    if penalty > 0.0:
        loss += penalty * _nuclear(probe.effective_weight())[0]
    return float(loss)


class _WordTable:
    """Trainable embedding table: train-vocab rows learn, appended OOV rows
    stay frozen at their keyed-hash values."""

    def __init__(self, provider):
        self.provider = provider
        self.trainable_rows = len(provider.vocab)
        self.row_index = dict(provider.vocab.index)
        self.extra: list[np.ndarray] = []

    def row_of(self, word: str) -> int:
        row = self.row_index.get(word)
        if row is None:
            row = self.trainable_rows + len(self.extra)
            self.row_index[word] = row
            self.extra.append(
                keyed_normal_vector(word, self.provider.seed, self.provider.dim)
            )
        return row

    def materialize(self) -> np.ndarray:
        base = self.provider.initial_table()
        if self.extra:
            return np.vstack([base, np.stack(self.extra)])
        return base


@dataclass
class _Encoded:
    """One dataset made trainable: dense features or table row ids."""

    task: str
    # classification
    x: np.ndarray | None = None
    ids: np.ndarray | None = None
    y: np.ndarray | None = None
    # parsing (per sentence)
    sent_x: list[np.ndarray] | None = None
    sent_ids: list[np.ndarray] | None = None
    heads: list[np.ndarray] | None = None

    @property
    def units(self) -> int:
        if self.task == PARSE:
            return len(self.heads)
        return len(self.y)


def _encode(dataset: TaskDataset, provider: RepresentationProvider,
            table: _WordTable | None) -> _Encoded:
    sentences = {s.sent_index: s for s in dataset.sentences}
    label_of = {label: i for i, label in enumerate(dataset.label_set)}
    if dataset.task == PARSE:
        if table is not None:
            sent_ids = [
                np.array([table.row_of(f) for f in sentences[i].forms], dtype=np.int64)
                for i, _ in dataset.instances
            ]
            heads = [np.asarray(h, dtype=np.int64) for _, h in dataset.instances]
            return _Encoded(task=PARSE, sent_ids=sent_ids, heads=heads)
        sent_x = [
            provider.embed_sentence(sentences[i]) for i, _ in dataset.instances
        ]
        heads = [np.asarray(h, dtype=np.int64) for _, h in dataset.instances]
        return _Encoded(task=PARSE, sent_x=sent_x, heads=heads)

    y = np.array(
        [label_of.get(label, -1) for _, label in dataset.instances], dtype=np.int64
    )
    if dataset.task == POSL:
        refs = [(ref,) for ref, _ in dataset.instances]
    elif dataset.task == DAL:
        refs = [(pair[0], pair[1]) for pair, _ in dataset.instances]
    else:
        raise ConfigurationError(f"unknown task {dataset.task!r}")
    if table is not None:
        ids = np.array(
            [
                [table.row_of(sentences[r.sent_index].tokens[r.position].form)
                 for r in group]
                for group in refs
            ],
            dtype=np.int64,
        )
        return _Encoded(task=dataset.task, ids=ids, y=y)
    cache: dict[int, np.ndarray] = {}

    def matrix(sent_index: int) -> np.ndarray:
        if sent_index not in cache:
            cache[sent_index] = provider.embed_sentence(sentences[sent_index])
        return cache[sent_index]

    x = np.stack(
        [
            np.concatenate([matrix(r.sent_index)[r.position] for r in group])
            for group in refs
        ]
    )
    return _Encoded(task=dataset.task, x=x, y=y)


def _features(encoded: _Encoded, table: np.ndarray | None,
              rows: np.ndarray | None = None) -> np.ndarray:
    if encoded.x is not None:
        return encoded.x if rows is None else encoded.x[rows]
    ids = encoded.ids if rows is None else encoded.ids[rows]
    return table[ids].reshape(len(ids), -1)


def _sentence_features(encoded: _Encoded, table: np.ndarray | None,
                       index: int) -> np.ndarray:
    if encoded.sent_x is not None:
        return encoded.sent_x[index]
    return table[encoded.sent_ids[index]]


def _accuracy(probe: Probe, encoded: _Encoded, table: np.ndarray | None) -> float:
    if encoded.task == PARSE:
        correct = 0
        total = 0
        for index, gold in enumerate(encoded.heads):
            predicted = probe.predict_heads(_sentence_features(encoded, table, index))
            correct += int(np.sum(predicted == gold))
            total += len(gold)
        return correct / total
    predictions = probe.predict(_features(encoded, table))
    return float(np.mean(predictions == encoded.y))


def _penalty_grads(probe: LinearProbe, grads: list[np.ndarray], penalty: float) -> float:
    """Add the nuclear-norm subgradient to ``grads``; returns the norm."""
    weight = probe.effective_weight()
    u, singulars, vt = np.linalg.svd(weight, full_matrices=False)
    subgradient = u @ vt
    if probe.weight is not None:
        grads[0] += penalty * subgradient
    else:
        grads[0] += penalty * (probe.right @ subgradient.T)
        grads[1] += penalty * (probe.left @ subgradient)
    return float(singulars.sum())


def _soft_threshold(weight: np.ndarray, amount: float) -> None:
    u, singulars, vt = np.linalg.svd(weight, full_matrices=False)
    weight[...] = (u * np.maximum(singulars - amount, 0.0)) @ vt


def _grad_norm(grads: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def train_probe(spec: ProbeSpec, provider: RepresentationProvider,
                dataset: TaskDataset, config: TrainConfig,
                dev: TaskDataset | None = None,
                test: TaskDataset | None = None) -> TrainedProbe:
    """Train one probe and score it.

    In real mode the monitored metric is dev accuracy when ``dev`` is given
    (train accuracy otherwise); in the shuffled modes it is train accuracy.
    The parameters from the best monitored epoch are restored before the
    final accuracies, nuclear norm, and rank are recorded.
    """
    if dataset.task != spec.task:
        raise ConfigurationError(
            f"dataset task {dataset.task!r} does not match spec task {spec.task!r}"
        )
    if config.penalty > 0.0 and spec.family not in (LINEAR_NUCLEAR, LINEAR_RANK):
        raise ConfigurationError(
            "the nuclear-norm penalty is defined only for the linear family"
        )
    if config.proximal and config.penalty > 0.0 and spec.family != LINEAR_NUCLEAR:
        raise ConfigurationError(
            "proximal updates apply to the unfactorized linear probe only"
        )
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    probe = build_probe(spec, provider.dim, len(dataset.label_set), rng)

    table_builder = _WordTable(provider) if provider.trainable else None
    encoded_train = _encode(dataset, provider, table_builder)
    encoded_dev = _encode(dev, provider, table_builder) if dev is not None else None
    encoded_test = _encode(test, provider, table_builder) if test is not None else None
    table = table_builder.materialize() if table_builder is not None else None

    params = probe.parameters() + ([table] if table is not None else [])
    optimizer = Adam(params, learning_rate=config.learning_rate)
    linear = isinstance(probe, LinearProbe)

    best_metric = -np.inf
    best_params: list[np.ndarray] | None = None
    stale_epochs = 0
    step = 0
    epochs_run = 0
    history: list[dict] = []

    for epoch in range(config.max_epochs):
        order = rng.permutation(encoded_train.units)
        for start in range(0, len(order), config.batch_size):
            chunk = order[start:start + config.batch_size]
            if encoded_train.task == PARSE:
                loss = 0.0
                grads = [np.zeros_like(p) for p in probe.parameters()]
                table_grad = np.zeros_like(table) if table is not None else None
                for index in chunk:
                    features = _sentence_features(encoded_train, table, index)
                    part_loss, part_grads, g_inputs = probe.loss_and_grads(
                        features, encoded_train.heads[index],
                        training=True, rng=rng,
                    )
                    loss += part_loss
                    for total, part in zip(grads, part_grads):
                        total += part
                    if table_grad is not None:
                        np.add.at(table_grad, encoded_train.sent_ids[index], g_inputs)
                if table_grad is not None:
                    table_grad[table_builder.trainable_rows:] = 0.0
                    grads.append(table_grad)
            else:
                features = _features(encoded_train, table, chunk)
                targets = encoded_train.y[chunk]
                if linear:
                    loss, grads, g_inputs = probe.loss_and_grads(features, targets)
                else:
                    loss, grads, g_inputs = probe.loss_and_grads(
                        features, targets, training=True, rng=rng
                    )
                if table is not None:
                    table_grad = np.zeros_like(table)
                    np.add.at(
                        table_grad,
                        encoded_train.ids[chunk].ravel(),
                        g_inputs.reshape(-1, provider.dim),
                    )
                    table_grad[table_builder.trainable_rows:] = 0.0
                    grads.append(table_grad)
            if linear and config.penalty > 0.0 and not config.proximal:
                loss += config.penalty * _penalty_grads(probe, grads, config.penalty)
            if not np.isfinite(loss):
                raise TrainingDiverged(step, _grad_norm(grads))
            optimizer.step(grads)
            if linear and config.penalty > 0.0 and config.proximal:
                _soft_threshold(probe.weight, config.learning_rate * config.penalty)
            step += 1
        epochs_run = epoch + 1

        train_accuracy = _accuracy(probe, encoded_train, table)
        dev_accuracy = (
            _accuracy(probe, encoded_dev, table) if encoded_dev is not None else None
        )
        if config.mode == REAL and dev_accuracy is not None:
            monitored = dev_accuracy
        else:
            monitored = train_accuracy
        history.append(
            {
                "epoch": epoch,
                "train_accuracy": train_accuracy,
                "dev_accuracy": dev_accuracy,
            }
        )
        if monitored > best_metric:
            best_metric = monitored
            best_params = [p.copy() for p in params]
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= config.patience:
                break

    if best_params is not None:
        for param, saved in zip(params, best_params):
            param[...] = saved

    nuclear = rank = None
    if linear:
        nuclear, rank = _nuclear(probe.effective_weight())
    return TrainedProbe(
        spec=spec,
        config=config,
        probe=probe,
        train_accuracy=_accuracy(probe, encoded_train, table),
        dev_accuracy=(
            _accuracy(probe, encoded_dev, table) if encoded_dev is not None else None
        ),
        test_accuracy=(
            _accuracy(probe, encoded_test, table) if encoded_test is not None else None
        ),
        nuclear_norm=nuclear,
        rank=rank,
        epochs_run=epochs_run,
        wall_time=time.perf_counter() - started,
        history=history,
        table=table,
    )


PENALTY_LOW = 2.0 ** -10
PENALTY_HIGH = 8.0


def sample_sweep(sweep: SweepSpec, dataset: TaskDataset, dim: int,
                 base_config: TrainConfig | None = None
                 ) -> list[tuple[ProbeSpec, TrainConfig]]:
    """Generate the (spec, config) pairs of one probe family.

    linear-nuclear: ``count`` penalties on a geometric grid over
    [2^-10, 8.0], plus one extra penalty-0 entry (count+1 pairs).
    linear-rank: ``count`` rank caps, log-uniform integers in
    [1, min(labels, d)]. mlp: ``count`` draws of layers ~ U{0..5},
    dropout ~ U[0, 0.5], hidden size log-uniform in [32, 1024].
    Deterministic given the sweep seed; each entry trains with its own
    derived seed.
    """
    base = base_config if base_config is not None else TrainConfig()
    rng = np.random.default_rng(sweep.seed)
    task = dataset.task
    pairs: list[tuple[ProbeSpec, TrainConfig]] = []
    if sweep.family == LINEAR_NUCLEAR:
        if task == PARSE:
            raise ConfigurationError("linear families do not apply to parsing")
        penalties = np.geomspace(PENALTY_LOW, PENALTY_HIGH, num=sweep.count)
        for i, penalty in enumerate(penalties):
            spec = ProbeSpec(task=task, family=sweep.family, probe_id=i)
            pairs.append((spec, replace(base, seed=base.seed + i,
                                        penalty=float(penalty))))
        spec = ProbeSpec(task=task, family=sweep.family, probe_id=sweep.count)
        pairs.append((spec, replace(base, seed=base.seed + sweep.count,
                                    penalty=0.0)))
    elif sweep.family == LINEAR_RANK:
        if task == PARSE:
            raise ConfigurationError("linear families do not apply to parsing")
        if not dataset.label_set:
            raise ConfigurationError("rank sweeps need a label set")
        cap = min(len(dataset.label_set), dim)
        for i in range(sweep.count):
            rank = int(np.clip(
                round(np.exp(rng.uniform(np.log(1.0), np.log(cap)))), 1, cap
            ))
            spec = ProbeSpec(task=task, family=sweep.family, probe_id=i, rank=rank)
            pairs.append((spec, replace(base, seed=base.seed + i, penalty=0.0)))
    elif sweep.family == MLP_FAMILY:
        for i in range(sweep.count):
            layers = int(rng.integers(0, 6))
            dropout = float(rng.uniform(0.0, 0.5))
            hidden = int(np.clip(
                round(np.exp(rng.uniform(np.log(32.0), np.log(1024.0)))), 32, 1024
            ))
            spec = ProbeSpec(task=task, family=sweep.family, probe_id=i,
                             hidden_layers=layers, hidden_size=hidden,
                             dropout=dropout)
            pairs.append((spec, replace(base, seed=base.seed + i, penalty=0.0)))
    else:  # unreachable: SweepSpec validates the family
        raise ConfigurationError(f"unknown probe family {sweep.family!r}")
    return pairs
