"""End-to-end experiment runs driven by a YAML config.

A run crosses tasks x representations x sweep families, trains every probe
the sweeps describe, measures the requested complexity metrics, and returns
one record per (probe, metric). Parametric metrics (nuclear norm, rank) are
read off the trained weights -- the effective linear weight for the linear
families, the bilinear matrix for parsing probes. Behavioral metrics train a
shuffled twin of the same architecture and record its train accuracy as the
complexity value, keeping the real run's accuracies as the quality columns.

Rows are sorted before writing so parallel execution (``jobs > 1``) yields
the same file as a serial run.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import dataclass, replace

import yaml

from . import complexity, corpus, representations, training
from .corpus import PARSE, TASKS, TaskDataset, Treebank
from .probes import BiaffineProbe
from .report import ExperimentRecord
from .representations import (
    CONTEXTUAL_FILE,
    DEFAULT_DIM,
    ONEHOT_LEARNED,
    PROVIDER_KINDS,
    RANDOM_FROZEN,
    STATIC_FILE,
    ContextualProvider,
    RepresentationProvider,
    Vocabulary,
    build_provider,
)
from .training import (
    FAMILIES,
    LINEAR_NUCLEAR,
    LINEAR_RANK,
    MLP_FAMILY,
    ProbeSpec,
    SweepSpec,
    TrainConfig,
    sample_sweep,
    train_probe,
)

DEFAULT_METRICS = (
    complexity.NUCLEAR_NORM,
    complexity.RANK,
    complexity.LABEL_SHUFFLED_METRIC,
)

_FILE_KINDS = (STATIC_FILE, CONTEXTUAL_FILE)


class ConfigError(ValueError):
    """Invalid experiment config; the message names the offending key."""


@dataclass(frozen=True)
class RepresentationConfig:
    name: str
    kind: str
    dim: int = DEFAULT_DIM
    seed: int | None = None
    path: str | None = None
    # contextual stores align to one CoNLL-U file, so dev/test splits need
    # their own files; the experiment layer merges them into one provider
    dev_path: str | None = None
    test_path: str | None = None
    shuffled_path: str | None = None


@dataclass(frozen=True)
class SweepConfig:
    family: str
    count: int = 50
    seed: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    language: str
    treebank_train: str
    tasks: tuple[str, ...]
    representations: tuple[RepresentationConfig, ...]
    sweeps: tuple[SweepConfig, ...]
    treebank_dev: str | None = None
    treebank_test: str | None = None
    metrics: tuple[str, ...] = DEFAULT_METRICS
    train_config: TrainConfig = TrainConfig()
    shuffled_patience: int = 10
    seed: int = 0
    shuffle_seed: int | None = None
    record_timings: bool = True


def _require_mapping(value, key: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected a mapping, got {type(value).__name__}")
    return dict(value)


def _require_list(value, key: str) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty list")
    return value


def _reject_unknown(mapping: dict, key: str) -> None:
    if mapping:
        bad = sorted(mapping)[0]
        where = f"{key}.{bad}" if key else bad
        raise ConfigError(f"unknown config key {where!r}")


def _take_str(mapping: dict, name: str, key: str, default=None, required=False):
    if name not in mapping:
        if required:
            raise ConfigError(f"{key}.{name} is required")
        return default
    value = mapping.pop(name)
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{key}.{name}: expected a non-empty string")
    return value


def _take_int(mapping: dict, name: str, key: str, default=None, minimum=None):
    if name not in mapping:
        return default
    value = mapping.pop(name)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}.{name}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}.{name}: must be >= {minimum}, got {value}")
    return value


def _take_number(mapping: dict, name: str, key: str, default=None):
    if name not in mapping:
        return default
    value = mapping.pop(name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}.{name}: expected a number")
    return float(value)


def _take_bool(mapping: dict, name: str, key: str, default):
    if name not in mapping:
        return default
    value = mapping.pop(name)
    if not isinstance(value, bool):
        raise ConfigError(f"{key}.{name}: expected true or false")
    return value


def _resolve(path: str | None, base_dir: str) -> str | None:
    if path is None:
        return None
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def validate_config(raw, base_dir: str = ".") -> ExperimentConfig:
    """Check every key of a parsed config mapping; unknown keys are errors."""
    top = _require_mapping(raw, "config")

    language = _take_str(top, "language", "config", required=True)
    seed = _take_int(top, "seed", "config", default=0)
    shuffle_seed = _take_int(top, "shuffle_seed", "config")
    record_timings = _take_bool(top, "record_timings", "config", True)

    treebank = _require_mapping(top.pop("treebank", None), "treebank")
    train_path = _resolve(
        _take_str(treebank, "train", "treebank", required=True), base_dir
    )
    dev_path = _resolve(_take_str(treebank, "dev", "treebank"), base_dir)
    test_path = _resolve(_take_str(treebank, "test", "treebank"), base_dir)
    _reject_unknown(treebank, "treebank")

    tasks = []
    for i, task in enumerate(_require_list(top.pop("tasks", None), "tasks")):
        if task not in TASKS:
            raise ConfigError(f"tasks[{i}]: unknown task {task!r}")
        if task in tasks:
            raise ConfigError(f"tasks[{i}]: duplicate task {task!r}")
        tasks.append(task)

    reps = []
    names = set()
    raw_reps = _require_list(top.pop("representations", None), "representations")
    for i, entry in enumerate(raw_reps):
        key = f"representations[{i}]"
        entry = _require_mapping(entry, key)
        kind = _take_str(entry, "kind", key, required=True)
        if kind not in PROVIDER_KINDS:
            raise ConfigError(f"{key}.kind: unknown representation kind {kind!r}")
        name = _take_str(entry, "name", key, default=kind)
        if name in names:
            raise ConfigError(f"{key}.name: duplicate representation name {name!r}")
        names.add(name)
        dim = _take_int(entry, "dim", key, default=DEFAULT_DIM, minimum=1)
        rep_seed = _take_int(entry, "seed", key)
        path = _resolve(_take_str(entry, "path", key), base_dir)
        dev_rep_path = _resolve(_take_str(entry, "dev_path", key), base_dir)
        test_rep_path = _resolve(_take_str(entry, "test_path", key), base_dir)
        shuffled_path = _resolve(_take_str(entry, "shuffled_path", key), base_dir)
        if kind in _FILE_KINDS and path is None:
            raise ConfigError(f"{key}.path is required for kind {kind!r}")
        if kind in (ONEHOT_LEARNED, RANDOM_FROZEN) and path is not None:
            raise ConfigError(f"{key}.path does not apply to kind {kind!r}")
        for split_key, value in (("dev_path", dev_rep_path),
                                 ("test_path", test_rep_path),
                                 ("shuffled_path", shuffled_path)):
            if value is not None and kind != CONTEXTUAL_FILE:
                raise ConfigError(
                    f"{key}.{split_key} applies to contextual-file "
                    f"representations only"
                )
        if kind == CONTEXTUAL_FILE:
            for split_key, value, split_path in (
                    ("dev_path", dev_rep_path, dev_path),
                    ("test_path", test_rep_path, test_path)):
                if split_path is not None and value is None:
                    raise ConfigError(
                        f"{key}.{split_key} is required when treebank."
                        f"{split_key[:-5]} is configured (contextual stores "
                        f"align to one treebank file)"
                    )
                if split_path is None and value is not None:
                    raise ConfigError(
                        f"{key}.{split_key} is set but treebank."
                        f"{split_key[:-5]} is not"
                    )
        _reject_unknown(entry, key)
        reps.append(RepresentationConfig(name=name, kind=kind, dim=dim,
                                         seed=rep_seed, path=path,
                                         dev_path=dev_rep_path,
                                         test_path=test_rep_path,
                                         shuffled_path=shuffled_path))

    sweeps = []
    families = set()
    for i, entry in enumerate(_require_list(top.pop("sweeps", None), "sweeps")):
        key = f"sweeps[{i}]"
        entry = _require_mapping(entry, key)
        family = _take_str(entry, "family", key, required=True)
        if family not in FAMILIES:
            raise ConfigError(f"{key}.family: unknown probe family {family!r}")
        if family in families:
            raise ConfigError(f"{key}.family: duplicate sweep family {family!r}")
        families.add(family)
        count = _take_int(entry, "count", key, default=50, minimum=1)
        sweep_seed = _take_int(entry, "seed", key)
        _reject_unknown(entry, key)
        sweeps.append(SweepConfig(family=family, count=count, seed=sweep_seed))

    metrics = list(DEFAULT_METRICS)
    if "metrics" in top:
        metrics = []
        for i, metric in enumerate(_require_list(top.pop("metrics"), "metrics")):
            if metric not in complexity.METRICS:
                raise ConfigError(f"metrics[{i}]: unknown complexity metric {metric!r}")
            if metric in metrics:
                raise ConfigError(f"metrics[{i}]: duplicate metric {metric!r}")
            metrics.append(metric)
    if complexity.FULLY_SHUFFLED_METRIC in metrics:
        if not any(r.kind == CONTEXTUAL_FILE and r.shuffled_path for r in reps):
            raise ConfigError(
                "metrics: fully-shuffled needs a contextual-file representation "
                "with a shuffled_path"
            )

    shuffled_patience = 10
    train_config = TrainConfig(seed=seed)
    if "training" in top:
        section = _require_mapping(top.pop("training"), "training")
        learning_rate = _take_number(section, "learning_rate", "training", 1e-3)
        if learning_rate <= 0.0:
            raise ConfigError("training.learning_rate: must be positive")
        batch_size = _take_int(section, "batch_size", "training", 64, minimum=1)
        max_epochs = _take_int(section, "max_epochs", "training", 50, minimum=1)
        patience = _take_int(section, "patience", "training", 5, minimum=1)
        shuffled_patience = _take_int(section, "shuffled_patience", "training",
                                      10, minimum=1)
        proximal = _take_bool(section, "proximal", "training", False)
        _reject_unknown(section, "training")
        train_config = TrainConfig(learning_rate=learning_rate,
                                   batch_size=batch_size, max_epochs=max_epochs,
                                   patience=patience, seed=seed,
                                   proximal=proximal)

    _reject_unknown(top, "")
    return ExperimentConfig(
        language=language,
        treebank_train=train_path,
        treebank_dev=dev_path,
        treebank_test=test_path,
        tasks=tuple(tasks),
        representations=tuple(reps),
        sweeps=tuple(sweeps),
        metrics=tuple(metrics),
        train_config=train_config,
        shuffled_patience=shuffled_patience,
        seed=seed,
        shuffle_seed=shuffle_seed if shuffle_seed is not None else seed,
        record_timings=record_timings,
    )


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a YAML experiment config; paths resolve relative
    to the config file's directory."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except yaml.YAMLError as error:
        raise ConfigError(f"config is not valid YAML: {error}") from error
    return validate_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


@dataclass
class _Job:
    """Everything one probe needs, picklable for process pools."""

    language: str
    representation: str
    spec: ProbeSpec
    config: TrainConfig
    provider: RepresentationProvider
    train: TaskDataset
    dev: TaskDataset | None
    test: TaskDataset | None
    metrics: tuple[str, ...]
    shuffled_patience: int
    shuffled_provider: RepresentationProvider | None = None
    shuffled_train: TaskDataset | None = None
    record_timings: bool = True


def _parametric_value(metric: str, trained: training.TrainedProbe,
                      spec: ProbeSpec) -> float | None:
    """Nuclear norm / rank of the probe's weight; None when undefined."""
    if spec.family in (LINEAR_NUCLEAR, LINEAR_RANK):
        return float(trained.nuclear_norm if metric == complexity.NUCLEAR_NORM
                     else trained.rank)
    if isinstance(trained.probe, BiaffineProbe):
        # The bilinear matrix has a norm worth reporting, but its rank cap is
        # the per-probe hidden size, so rank rows would have no shared bound.
        if metric == complexity.NUCLEAR_NORM:
            return complexity.nuclear_norm(trained.probe.bilinear)
    return None  # deep classification probes have no single weight matrix


def _run_job(job: _Job) -> list[ExperimentRecord]:
    real = train_probe(job.spec, job.provider, job.train, job.config,
                       dev=job.dev, test=job.test)
    hyperparameters = {
        "penalty": job.config.penalty,
        "rank": job.spec.rank,
        "hidden_layers": job.spec.hidden_layers,
        "hidden_size": job.spec.hidden_size,
        "dropout": job.spec.dropout,
        "dim": job.provider.dim,
        "n_labels": len(job.train.label_set),
    }
    wall_time = real.wall_time if job.record_timings else None
    records = []

    def emit(metric: str, value: float) -> None:
        records.append(ExperimentRecord(
            language=job.language,
            task=job.spec.task,
            representation=job.representation,
            family=job.spec.family,
            probe_id=job.spec.probe_id,
            hyperparameters=hyperparameters,
            complexity_metric=metric,
            complexity_value=value,
            train_accuracy=real.train_accuracy,
            dev_accuracy=real.dev_accuracy,
            test_accuracy=real.test_accuracy,
            seed=job.config.seed,
            wall_time=wall_time,
        ))

    twin_config = replace(job.config, patience=job.shuffled_patience)
    for metric in job.metrics:
        if metric in (complexity.NUCLEAR_NORM, complexity.RANK):
            value = _parametric_value(metric, real, job.spec)
            if value is not None:
                emit(metric, value)
        elif metric == complexity.LABEL_SHUFFLED_METRIC:
            score = complexity.memorization_score(
                job.spec, job.provider, job.train, twin_config, metric
            )
            emit(metric, score.value)
        elif metric == complexity.FULLY_SHUFFLED_METRIC:
            if job.shuffled_provider is None or job.shuffled_train is None:
                continue  # meaningless for type-level vectors
            score = complexity.memorization_score(
                job.spec, job.shuffled_provider, job.shuffled_train,
                twin_config, metric,
            )
            emit(metric, score.value)
    return records


def _task_datasets(task: str, train_tb: Treebank, dev_tb: Treebank | None,
                   test_tb: Treebank | None):
    train = corpus.extract_task(train_tb, task)
    dev = test = None
    if dev_tb is not None:
        dev = corpus.with_label_set(corpus.extract_task(dev_tb, task),
                                    train.label_set)
    if test_tb is not None:
        test = corpus.with_label_set(corpus.extract_task(test_tb, task),
                                     train.label_set)
    return train, dev, test


def _shift_sentences(treebank: Treebank, offset: int) -> Treebank:
    shifted = tuple(
        replace(sentence, sent_index=sentence.sent_index + offset)
        for sentence in treebank.sentences
    )
    return replace(treebank, sentences=shifted)


def _merged_contextual(rep: RepresentationConfig, seed: int,
                       splits) -> ContextualProvider:
    """One provider covering every split's store, re-indexed to match the
    shifted dev/test treebanks."""
    store = {}
    dim = None
    for path, offset in splits:
        loaded = build_provider(CONTEXTUAL_FILE, dim=rep.dim, seed=seed,
                                path=path, name=rep.name)
        if dim is None:
            dim = loaded.dim
        elif loaded.dim != dim:
            raise ValueError(
                f"{rep.name}: {path} has dimension {loaded.dim}, "
                f"other splits have {dim}"
            )
        for sent_index, matrix in loaded.store.items():
            store[sent_index + offset] = matrix
    return ContextualProvider(store=store, dim=dim, seed=seed, name=rep.name)


def build_jobs(config: ExperimentConfig) -> list[_Job]:
    """Materialize the full task x representation x sweep-entry job list."""
    train_tb = corpus.read_conllu(config.treebank_train, split=corpus.TRAIN,
                                  language=config.language)
    dev_tb = (corpus.read_conllu(config.treebank_dev, split=corpus.DEV,
                                 language=config.language)
              if config.treebank_dev else None)
    test_tb = (corpus.read_conllu(config.treebank_test, split=corpus.TEST,
                                  language=config.language)
               if config.treebank_test else None)
    vocab = Vocabulary.from_treebank(train_tb)

    # contextual stores are keyed by sentence index within one file; give
    # dev/test sentences disjoint index ranges so one provider can serve all
    dev_offset = len(train_tb)
    test_offset = dev_offset + (len(dev_tb) if dev_tb is not None else 0)
    if dev_tb is not None:
        dev_tb = _shift_sentences(dev_tb, dev_offset)
    if test_tb is not None:
        test_tb = _shift_sentences(test_tb, test_offset)

    want_fully = complexity.FULLY_SHUFFLED_METRIC in config.metrics
    shuffled_tb = (corpus.shuffle_treebank_inputs(train_tb, config.shuffle_seed)
                   if want_fully else None)

    providers = []
    for rep in config.representations:
        seed = rep.seed if rep.seed is not None else config.seed
        if rep.kind == CONTEXTUAL_FILE:
            splits = [(rep.path, 0)]
            if rep.dev_path:
                splits.append((rep.dev_path, dev_offset))
            if rep.test_path:
                splits.append((rep.test_path, test_offset))
            provider = _merged_contextual(rep, seed, splits)
        else:
            provider = build_provider(rep.kind, vocab=vocab, dim=rep.dim,
                                      seed=seed, path=rep.path, name=rep.name)
        shuffled_provider = None
        if want_fully and rep.shuffled_path:
            shuffled_provider = build_provider(
                CONTEXTUAL_FILE, vocab=vocab, dim=rep.dim, seed=seed,
                path=rep.shuffled_path, name=rep.name,
            )
        providers.append((rep, provider, shuffled_provider))

    jobs: list[_Job] = []
    for task in config.tasks:
        train, dev, test = _task_datasets(task, train_tb, dev_tb, test_tb)
        shuffled_train = None
        if shuffled_tb is not None:
            shuffled_train = corpus.with_label_set(
                corpus.extract_task(shuffled_tb, task), train.label_set
            )
        for rep, provider, shuffled_provider in providers:
            for sweep in config.sweeps:
                if task == PARSE and sweep.family != MLP_FAMILY:
                    continue  # parsing probes are biaffine; no linear sweep
                sweep_seed = sweep.seed if sweep.seed is not None else config.seed
                pairs = sample_sweep(
                    SweepSpec(family=sweep.family, count=sweep.count,
                              seed=sweep_seed),
                    train, provider.dim, base_config=config.train_config,
                )
                for spec, train_config in pairs:
                    jobs.append(_Job(
                        language=config.language,
                        representation=rep.name,
                        spec=spec,
                        config=train_config,
                        provider=provider,
                        train=train,
                        dev=dev,
                        test=test,
                        metrics=config.metrics,
                        shuffled_patience=config.shuffled_patience,
                        shuffled_provider=shuffled_provider,
                        shuffled_train=(shuffled_train if shuffled_provider
                                        is not None else None),
                        record_timings=config.record_timings,
                    ))
    return jobs


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[ExperimentRecord]:
    """Run every job and return records sorted by their uniqueness key."""
    job_list = build_jobs(config)
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_run_job, job_list))
    else:
        batches = [_run_job(job) for job in job_list]
    records = [record for batch in batches for record in batch]
    records.sort(key=lambda r: (r.language, r.task, r.representation, r.family,
                                r.probe_id, r.complexity_metric))
    return records
