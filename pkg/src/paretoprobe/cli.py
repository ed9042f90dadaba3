"""Command-line entry points.

Subcommands: ``ingest`` validates the configured treebanks and embedding
files, ``sweep`` runs the configured experiment and writes the results CSV,
``report`` renders frontier/hypervolume tables or an SVG plot from a results
file, ``shuffle`` materializes input-shuffled treebanks, and ``lookup`` runs
the dictionary baselines. Config-content problems exit with 2; IO and
runtime failures exit with 1.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import baselines, corpus, experiment, report, representations, training
from .corpus import DAL, DEV, PARSE, POSL, TEST, TRAIN


def _split_paths(config: experiment.ExperimentConfig):
    yield TRAIN, config.treebank_train
    if config.treebank_dev:
        yield DEV, config.treebank_dev
    if config.treebank_test:
        yield TEST, config.treebank_test


def _cmd_ingest(args) -> int:
    config = experiment.load_config(args.config)
    treebanks = {}
    for split, path in _split_paths(config):
        treebank = corpus.read_conllu(path, split=split, language=config.language)
        treebanks[split] = treebank
        tokens = sum(len(s) for s in treebank.sentences)
        print(f"{split}: {len(treebank.sentences)} sentences, {tokens} tokens")
    vocab = representations.Vocabulary.from_treebank(treebanks[TRAIN])
    print(f"train vocabulary: {len(vocab)} word types")
    for rep in config.representations:
        seed = rep.seed if rep.seed is not None else config.seed
        provider = representations.build_provider(
            rep.kind, vocab=vocab, dim=rep.dim, seed=seed, path=rep.path,
            name=rep.name,
        )
        note = "ok"
        if rep.kind == representations.CONTEXTUAL_FILE:
            aligned = []
            split_paths = [(TRAIN, rep.path), (DEV, rep.dev_path),
                           (TEST, rep.test_path)]
            for split, split_path in split_paths:
                if split_path is None or split not in treebanks:
                    continue
                split_provider = representations.build_provider(
                    representations.CONTEXTUAL_FILE, vocab=vocab, dim=rep.dim,
                    seed=seed, path=split_path, name=rep.name,
                )
                for sentence in treebanks[split].sentences:
                    split_provider.embed_sentence(sentence)
                aligned.append(split)
            note = "aligned to " + ", ".join(aligned)
        if rep.shuffled_path:
            shuffled = corpus.shuffle_treebank_inputs(
                treebanks[TRAIN], config.shuffle_seed
            )
            twin = representations.build_provider(
                representations.CONTEXTUAL_FILE, vocab=vocab, dim=rep.dim,
                seed=seed, path=rep.shuffled_path, name=rep.name,
            )
            for sentence in shuffled.sentences:
                twin.embed_sentence(sentence)
            note += ", shuffled twin aligned"
        print(f"representation {rep.name} ({rep.kind}, dim {provider.dim}): {note}")
    return 0


def _override_seed(config: experiment.ExperimentConfig,
                   seed: int | None) -> experiment.ExperimentConfig:
    if seed is None:
        return config
    return replace(
        config,
        seed=seed,
        shuffle_seed=seed,
        train_config=replace(config.train_config, seed=seed),
    )


def _cmd_sweep(args) -> int:
    config = _override_seed(experiment.load_config(args.config), args.seed)
    records = experiment.run_experiment(config, jobs=args.jobs)
    report.write_records(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_report(args) -> int:
    records = report.read_records(args.results)
    selected = report.filter_records(
        records, language=args.language, task=args.task, metric=args.metric,
        representation=args.representation,
    )
    if args.mode == "plot":
        document = report.plot_svg(selected)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as handle:
                handle.write(document)
            print(f"wrote plot to {args.out}")
        else:
            print(document, end="")
        return 0
    if args.mode == "frontier":
        rows, columns = report.frontier_rows(selected), report.FRONTIER_COLUMNS
    else:
        rows, columns = report.hypervolume_rows(selected), report.HYPERVOLUME_COLUMNS
    if args.out:
        report.write_table(rows, columns, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print(report.format_table(rows, columns), end="")
    return 0


def _cmd_shuffle(args) -> int:
    config = experiment.load_config(args.config)
    seed = args.seed if args.seed is not None else config.shuffle_seed
    os.makedirs(args.out, exist_ok=True)
    for split, path in _split_paths(config):
        treebank = corpus.read_conllu(path, split=split, language=config.language)
        shuffled = corpus.shuffle_treebank_inputs(treebank, seed)
        out_path = os.path.join(args.out, f"{split}.shuffled.conllu")
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(corpus.serialize_conllu(shuffled))
        print(f"wrote {out_path}")
    return 0


def _cmd_lookup(args) -> int:
    config = experiment.load_config(args.config)
    train_tb = corpus.read_conllu(config.treebank_train, split=TRAIN,
                                  language=config.language)
    if config.treebank_test:
        eval_split, eval_path = TEST, config.treebank_test
    elif config.treebank_dev:
        eval_split, eval_path = DEV, config.treebank_dev
    else:
        eval_split, eval_path = TRAIN, config.treebank_train
    eval_tb = corpus.read_conllu(eval_path, split=eval_split,
                                 language=config.language)
    rows = []
    for task in config.tasks:
        if task == PARSE:
            continue  # no lookup model for head selection
        train_set = corpus.extract_task(train_tb, task)
        eval_set = corpus.extract_task(eval_tb, task)
        score = (baselines.lookup_posl if task == POSL else baselines.lookup_dal)(
            train_set, eval_set
        )
        rows.append((config.language, task, eval_split, score))
    columns = ("language", "task", "split", "accuracy")
    if args.out:
        report.write_table(rows, columns, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print(report.format_table(rows, columns), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paretoprobe",
        description="Probe word representations and report Pareto trade-offs "
                    "between probe complexity and task accuracy.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    ingest = subparsers.add_parser(
        "ingest", help="validate configured treebanks and embedding files")
    ingest.add_argument("--config", required=True, help="experiment config YAML")
    ingest.set_defaults(handler=_cmd_ingest)

    sweep = subparsers.add_parser(
        "sweep", help="run the configured sweeps and write a results CSV")
    sweep.add_argument("--config", required=True, help="experiment config YAML")
    sweep.add_argument("--out", required=True, help="results CSV path")
    sweep.add_argument("--seed", type=int, default=None,
                       help="override the config seed (and shuffle seed)")
    sweep.add_argument("--jobs", type=int, default=1,
                       help="parallel training processes")
    sweep.set_defaults(handler=_cmd_sweep)

    rep = subparsers.add_parser(
        "report", help="tables or plots from a results CSV")
    rep.add_argument("--results", required=True, help="results CSV path")
    rep.add_argument("--mode", required=True,
                     choices=("frontier", "hypervolume", "plot"))
    rep.add_argument("--out", default=None, help="output path (default stdout)")
    rep.add_argument("--language", default=None)
    rep.add_argument("--task", default=None, choices=corpus.TASKS)
    rep.add_argument("--metric", default=None)
    rep.add_argument("--representation", default=None)
    rep.set_defaults(handler=_cmd_report)

    shuffle = subparsers.add_parser(
        "shuffle", help="write input-shuffled copies of the treebank splits")
    shuffle.add_argument("--config", required=True, help="experiment config YAML")
    shuffle.add_argument("--out", required=True, help="output directory")
    shuffle.add_argument("--seed", type=int, default=None,
                         help="override the config shuffle seed")
    shuffle.set_defaults(handler=_cmd_shuffle)

    lookup = subparsers.add_parser(
        "lookup", help="dictionary-lookup baseline accuracies")
    lookup.add_argument("--config", required=True, help="experiment config YAML")
    lookup.add_argument("--out", default=None, help="CSV output path")
    lookup.set_defaults(handler=_cmd_lookup)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (experiment.ConfigError, training.ConfigurationError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
